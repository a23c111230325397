#include "emband/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "emband/errors.hpp"
#include "emband/rng.hpp"

namespace emband {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& bytes, const std::string& what) {
  CsvTable table;
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (line_no == 1) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw FormatError(what + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw FormatError(what + ": missing header row");
  if (table.header[0] != "id")
    throw FormatError(what + ": first header column must be 'id', got '" + table.header[0] + "'");
  if (table.header.size() < 2) throw FormatError(what + ": no value columns");
  if (table.rows.empty()) throw FormatError(what + ": no data rows");
  return table;
}

double parse_real(const std::string& text, const std::string& what, std::size_t row,
                  std::size_t col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError(what + ": cell at row " + std::to_string(row + 2) + ", column " +
                      std::to_string(col + 1) + " is not a number: '" + text + "'");
  }
}

}  // namespace

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path, TaskKind task) {
  const CsvTable features = parse_csv(read_file(features_path), "features");
  const CsvTable labels = parse_csv(read_file(labels_path), "labels");

  Dataset ds;
  ds.task = task;
  ds.feature_names.assign(features.header.begin() + 1, features.header.end());

  const Index n = static_cast<Index>(features.rows.size());
  const Index d = static_cast<Index>(ds.feature_names.size());
  ds.x.resize(n, d);
  ds.sample_ids.reserve(static_cast<std::size_t>(n));
  std::unordered_map<std::string, Index> feature_row;
  for (Index i = 0; i < n; ++i) {
    const auto& row = features.rows[static_cast<std::size_t>(i)];
    if (!feature_row.emplace(row[0], i).second)
      throw FormatError("features: duplicate id '" + row[0] + "'");
    ds.sample_ids.push_back(row[0]);
    for (Index c = 0; c < d; ++c)
      ds.x(i, c) = parse_real(row[static_cast<std::size_t>(c + 1)], "features",
                              static_cast<std::size_t>(i), static_cast<std::size_t>(c + 1));
  }

  std::unordered_map<std::string, const std::vector<std::string>*> label_row;
  for (const auto& row : labels.rows) {
    if (!label_row.emplace(row[0], &row).second)
      throw FormatError("labels: duplicate id '" + row[0] + "'");
    if (!feature_row.count(row[0]))
      throw JoinError("label id '" + row[0] + "' has no feature row");
  }
  for (const auto& id : ds.sample_ids)
    if (!label_row.count(id)) throw JoinError("feature id '" + id + "' has no label row");

  switch (task) {
    case TaskKind::MultiLabel: {
      ds.target_names.assign(labels.header.begin() + 1, labels.header.end());
      const Index t_count = static_cast<Index>(ds.target_names.size());
      ds.labels.resize(n, t_count);
      for (Index i = 0; i < n; ++i) {
        const auto& row = *label_row.at(ds.sample_ids[static_cast<std::size_t>(i)]);
        for (Index t = 0; t < t_count; ++t) {
          const double v = parse_real(row[static_cast<std::size_t>(t + 1)], "labels",
                                      static_cast<std::size_t>(i), static_cast<std::size_t>(t + 1));
          if (v != 0.0 && v != 1.0)
            throw LabelDomainError("labels: cell for id '" +
                                   ds.sample_ids[static_cast<std::size_t>(i)] + "', tag '" +
                                   ds.target_names[static_cast<std::size_t>(t)] +
                                   "' must be 0 or 1, got '" + row[static_cast<std::size_t>(t + 1)] + "'");
          ds.labels(i, t) = v;
        }
      }
      break;
    }
    case TaskKind::MultiClass: {
      if (labels.header.size() != 2 || labels.header[1] != "class")
        throw FormatError("labels: multiclass header must be 'id,class'");
      std::map<std::string, int> class_id;  // sorted name -> id
      for (const auto& row : labels.rows) class_id.emplace(row[1], 0);
      int next = 0;
      for (auto& [name, id] : class_id) id = next++;
      ds.target_names.reserve(class_id.size());
      for (const auto& [name, id] : class_id) ds.target_names.push_back(name);
      ds.class_ids.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        const auto& row = *label_row.at(ds.sample_ids[static_cast<std::size_t>(i)]);
        ds.class_ids[static_cast<std::size_t>(i)] = class_id.at(row[1]);
      }
      break;
    }
    case TaskKind::Regression: {
      if (labels.header.size() != 2 || labels.header[1] != "target")
        throw FormatError("labels: regression header must be 'id,target'");
      ds.target_names = {"target"};
      ds.labels.resize(n, 1);
      for (Index i = 0; i < n; ++i) {
        const auto& row = *label_row.at(ds.sample_ids[static_cast<std::size_t>(i)]);
        ds.labels(i, 0) = parse_real(row[1], "labels", static_cast<std::size_t>(i), 1);
      }
      break;
    }
  }
  ds.check();
  return ds;
}

std::string features_to_csv(const Dataset& dataset) {
  std::string out = "id";
  for (const auto& name : dataset.feature_names) out += "," + name;
  out += "\n";
  for (Index i = 0; i < dataset.rows(); ++i) {
    out += dataset.sample_ids[static_cast<std::size_t>(i)];
    for (Index c = 0; c < dataset.cols(); ++c) out += "," + format_real(dataset.x(i, c));
    out += "\n";
  }
  return out;
}

std::string labels_to_csv(const Dataset& dataset) {
  std::string out;
  switch (dataset.task) {
    case TaskKind::MultiLabel: {
      out = "id";
      for (const auto& name : dataset.target_names) out += "," + name;
      out += "\n";
      for (Index i = 0; i < dataset.rows(); ++i) {
        out += dataset.sample_ids[static_cast<std::size_t>(i)];
        for (Index t = 0; t < dataset.labels.cols(); ++t)
          out += dataset.labels(i, t) == 1.0 ? ",1" : ",0";
        out += "\n";
      }
      break;
    }
    case TaskKind::MultiClass: {
      out = "id,class\n";
      for (Index i = 0; i < dataset.rows(); ++i)
        out += dataset.sample_ids[static_cast<std::size_t>(i)] + "," +
               dataset.target_names[static_cast<std::size_t>(
                   dataset.class_ids[static_cast<std::size_t>(i)])] +
               "\n";
      break;
    }
    case TaskKind::Regression: {
      out = "id,target\n";
      for (Index i = 0; i < dataset.rows(); ++i)
        out += dataset.sample_ids[static_cast<std::size_t>(i)] + "," +
               format_real(dataset.labels(i, 0)) + "\n";
      break;
    }
  }
  return out;
}

std::pair<std::vector<Index>, std::vector<Index>> holdout_split(Index n, double fraction,
                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw UsageError("holdout fraction must be in (0, 1)");
  const Index test_size = std::max<Index>(1, static_cast<Index>(std::lround(fraction * static_cast<double>(n))));
  if (test_size >= n) throw UsageError("holdout fraction leaves no training rows");
  SplitMix64 rng(seed);
  const Index start = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n - test_size + 1)));
  std::vector<Index> train, test;
  train.reserve(static_cast<std::size_t>(n - test_size));
  test.reserve(static_cast<std::size_t>(test_size));
  for (Index i = 0; i < n; ++i)
    (i >= start && i < start + test_size ? test : train).push_back(i);
  return {train, test};
}

Dataset take_rows(const Dataset& dataset, const std::vector<Index>& rows) {
  Dataset out;
  out.task = dataset.task;
  out.feature_names = dataset.feature_names;
  out.target_names = dataset.target_names;
  const Index n = static_cast<Index>(rows.size());
  out.x.resize(n, dataset.cols());
  out.sample_ids.reserve(static_cast<std::size_t>(n));
  if (dataset.task == TaskKind::MultiClass)
    out.class_ids.resize(static_cast<std::size_t>(n));
  else
    out.labels.resize(n, dataset.labels.cols());
  for (Index i = 0; i < n; ++i) {
    const Index src = rows[static_cast<std::size_t>(i)];
    out.x.row(i) = dataset.x.row(src);
    out.sample_ids.push_back(dataset.sample_ids[static_cast<std::size_t>(src)]);
    if (dataset.task == TaskKind::MultiClass)
      out.class_ids[static_cast<std::size_t>(i)] = dataset.class_ids[static_cast<std::size_t>(src)];
    else
      out.labels.row(i) = dataset.labels.row(src);
  }
  return out;
}

Dataset take_columns(const Dataset& dataset, const std::vector<Index>& cols) {
  Dataset out = dataset;
  const Index d = static_cast<Index>(cols.size());
  out.x.resize(dataset.rows(), d);
  out.feature_names.clear();
  out.feature_names.reserve(static_cast<std::size_t>(d));
  for (Index c = 0; c < d; ++c) {
    out.x.col(c) = dataset.x.col(cols[static_cast<std::size_t>(c)]);
    out.feature_names.push_back(
        dataset.feature_names[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])]);
  }
  return out;
}

}  // namespace emband
