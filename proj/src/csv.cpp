#include "pacbma/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pacbma {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& S) {
  const auto d = S.X.cols(), r = S.Y.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << (j + 1);
  if (r == 1) {
    out << (d ? "," : "") << "y";
  } else {
    for (Eigen::Index c = 0; c < r; ++c) out << (d || c ? "," : "") << 'y' << (c + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < S.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << format_double(S.X(i, j));
    for (Eigen::Index c = 0; c < r; ++c) out << (d || c ? "," : "") << format_double(S.Y(i, c));
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const LabeledDataset& S) {
  std::ostringstream os;
  write_dataset_csv(os, S);
  write_file_atomic(path, os.str());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

} // namespace

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header (line 1)");
  auto header = split(trim(line));
  std::vector<int> feature_cols, response_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = trim(header[c]);
    if (!h.empty() && h[0] == 'y') response_cols.push_back(static_cast<int>(c));
    else feature_cols.push_back(static_cast<int>(c));
  }
  if (response_cols.empty()) throw std::invalid_argument("csv: no response column (line 1)");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("csv: wrong number of fields at line " + std::to_string(lineno));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw std::invalid_argument("csv: bad number '" + cell + "' at line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");

  LabeledDataset S;
  S.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  S.Y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(response_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j)
      S.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][static_cast<std::size_t>(feature_cols[j])];
    for (std::size_t j = 0; j < response_cols.size(); ++j)
      S.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][static_cast<std::size_t>(response_cols[j])];
  }
  return S;
}

LabeledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  return read_dataset_csv(in);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::system_error(EIO, std::generic_category(), "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

} // namespace pacbma
