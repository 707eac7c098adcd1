#pragma once

#include <string>

#include "dprsa/fedsim.hpp"

namespace dprsa {

inline constexpr const char* kRunCsvHeader =
    "round,loss,accuracy,epsilon_round,algo,attack,seed";
inline constexpr const char* kSweepCsvHeader =
    "param,value,round,loss,accuracy,epsilon_round,algo,attack,seed";
inline constexpr const char* kVerifyCsvHeader =
    "mechanism,epsilon,parameter,observed_worst_pl,pass";

/// 17-significant-digit float rendering ("%.17g"); non-finite values come
/// out as "inf", "-inf", "nan". One fixed formatting for every CSV cell so
/// identical runs produce identical bytes.
std::string csv_double(double v);

/// One data row per round, no header.
std::string run_csv_rows(const SimConfig& cfg, const RunMetrics& metrics);

/// Header plus all rows, trailing newline included.
std::string run_csv_text(const SimConfig& cfg, const RunMetrics& metrics);

/// Run rows prefixed with the swept parameter name and value, no header.
std::string sweep_csv_rows(const std::string& param, double value, const SimConfig& cfg,
                           const RunMetrics& metrics);

/// Writes text to path, creating parent directories; throws std::runtime_error
/// on I/O failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dprsa
