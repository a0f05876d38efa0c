#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "pacbma/core.hpp"

namespace pacbma {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Header `x1,...,xd,y` (scalar response) or `x1,...,xd,y1,...,yc` (one-hot).
void write_dataset_csv(std::ostream& out, const LabeledDataset& S);
void write_dataset_csv(const std::string& path, const LabeledDataset& S);

/// Columns named y or y<k> are responses; everything else is a feature.
/// Throws std::invalid_argument with a line number on malformed input.
LabeledDataset read_dataset_csv(std::istream& in);
LabeledDataset read_dataset_csv(const std::string& path);

/// Writes `content` to `path` through a temporary file and a rename, so a
/// failed write leaves no partial file behind.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace pacbma
