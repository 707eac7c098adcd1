#include "dprsa/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dprsa {

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string run_csv_rows(const SimConfig& cfg, const RunMetrics& metrics) {
  std::ostringstream out;
  for (const RoundLog& log : metrics.rounds) {
    out << log.round << ',' << csv_double(log.train_loss) << ','
        << csv_double(log.test_accuracy) << ',' << csv_double(log.epsilon_round) << ','
        << algorithm_name(cfg.algorithm) << ',' << attack_name(cfg.attack.kind) << ','
        << cfg.seed << '\n';
  }
  return out.str();
}

std::string run_csv_text(const SimConfig& cfg, const RunMetrics& metrics) {
  return std::string(kRunCsvHeader) + "\n" + run_csv_rows(cfg, metrics);
}

std::string sweep_csv_rows(const std::string& param, double value, const SimConfig& cfg,
                           const RunMetrics& metrics) {
  std::string prefix = param + "," + csv_double(value) + ",";
  std::ostringstream out;
  std::istringstream rows(run_csv_rows(cfg, metrics));
  std::string line;
  while (std::getline(rows, line)) out << prefix << line << '\n';
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + p.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing output file " + path);
}

}  // namespace dprsa
