#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emband/dataset.hpp"

namespace emband {

// CSV dialect: UTF-8, comma delimiter, mandatory header with `id` first,
// decimal point, no quoting, LF line endings on emission. Reals are written
// with 17 significant digits so emitted files reload to identical bytes.

// Joins a feature CSV (`id,<feature names...>`) with a label CSV:
//   multilabel  `id,<tag names...>` with 0/1 cells
//   multiclass  `id,class` with class names (ids assigned in sorted order)
//   regression  `id,target`
// Rows are kept in feature-file order; label rows may appear in any order
// but the id sets must match exactly.
Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path, TaskKind task);

std::string features_to_csv(const Dataset& dataset);
std::string labels_to_csv(const Dataset& dataset);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit content digest, rendered as 16 hex digits.
std::string fnv1a64_hex(const std::string& bytes);

// 17-significant-digit decimal rendering that round-trips doubles.
std::string format_real(double value);

// Contiguous holdout split: the test block starts at a seeded offset in
// [0, n - test_size]. Returns (train_indices, test_indices) in row order.
std::pair<std::vector<Index>, std::vector<Index>> holdout_split(Index n, double fraction,
                                                                std::uint64_t seed);

// Row subset of a dataset (features, ids, labels).
Dataset take_rows(const Dataset& dataset, const std::vector<Index>& rows);

// Column subset (features and names), preserving labels.
Dataset take_columns(const Dataset& dataset, const std::vector<Index>& cols);

}  // namespace emband
