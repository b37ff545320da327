#pragma once

#include "svar/eval.hpp"
#include "svar/lasso.hpp"
#include "svar/spectral.hpp"
#include "svar/two_stage.hpp"

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace svar::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits; parses back to the same double.
std::string format_double(double v);

/// Comma-separated numbers, one row per time point. A first row holding any
/// non-numeric field is taken as a header; blank lines and lines starting
/// with '#' are skipped. Errors name the line and column.
struct Table {
  std::vector<std::string> header;  // empty without a header row
  MultiSeries data;
};
Table parse_csv(std::istream& in, const std::string& source = "<input>");
Table read_csv(const std::string& path);
void write_csv(const std::string& path, const MultiSeries& data, const std::vector<std::string>& header = {});

/// {p, K, A[lag][row][col], sigma_z, mu}
Json model_to_json(const VarModel& model);
VarModel model_from_json(const Json& j);
VarModel read_model(const std::string& path);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// lag,row,col,value with 1-based indices, every entry of every lag.
void write_coefficients(const std::string& path, const VarModel& model);
/// Inverse of write_coefficients; order and dimension are the largest
/// indices present.
std::vector<Matrix> read_coefficients(const std::string& path);

Json config_to_json(const TwoStageConfig& config);
Json report_to_json(const FitReport& report);
Json lasso_fit_to_json(const LassoFit& fit);

void write_stage1_bic(const std::string& path, const Stage1Result& stage1);
void write_stage2_bic(const std::string& path, const Stage2Result& stage2);
/// i,j,sup_psc_sq,rank with 1-based series indices.
void write_psc_summary(const std::string& path, const PairRanking& ranking);
void write_cv_table(const std::string& path, const std::vector<CvRow>& table);

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows);
Json record_to_json(const RepRecord& record);
void write_records(const std::string& path, const std::vector<RepRecord>& records);

}  // namespace svar::io
