#pragma once

#include "svar/eval.hpp"
#include "svar/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace svar::cli {

enum ExitCode { ok = 0, input_error = 2, numerical_failure = 3 };

/// Config documents reject unknown keys; absent keys keep the library defaults.
TwoStageConfig two_stage_config_from_json(const io::Json& j);
CvPlan cv_plan_from_json(const io::Json& j);
LassoOptions lasso_options_from_json(const io::Json& j);
/// A study document may name a preset and override any of its fields.
StudyConfig study_config_from_json(const io::Json& j);
io::Json study_config_to_json(const StudyConfig& config);
io::Json cv_plan_to_json(const CvPlan& plan);

/// Runs the command line; diagnostics go to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace svar::cli
