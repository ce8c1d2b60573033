#include "hdc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "hdc/errors.hpp"
#include "hdc/eval.hpp"

namespace hdc {

namespace fs = std::filesystem;

DataFormat format_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ts" ? DataFormat::Ts : DataFormat::Delimited;
}

namespace {

struct RawRows {
  std::vector<std::vector<double>> series;
  std::vector<std::string> labels;
  std::vector<std::size_t> lines;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double parse_value(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  if (tok.empty()) fail(line, "empty value");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    if (tok == "?" || tok == "NaN" || tok == "nan") fail(line, "missing or non-finite value '" + std::string(tok) + "'");
    fail(line, "cannot parse value '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) fail(line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  char delim = 0;
  if (line.find('\t') != std::string_view::npos) {
    delim = '\t';
  } else if (line.find(',') != std::string_view::npos) {
    delim = ',';
  }
  if (delim != 0) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(delim, start);
      out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    // a trailing delimiter does not add a value
    if (out.size() > 1 && trim(out.back()).empty()) out.pop_back();
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
    const std::size_t s = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

void check_ragged(const RawRows& rows) {
  if (rows.series.empty()) throw DataError("no data rows");
  const std::size_t m = rows.series.front().size();
  for (std::size_t i = 1; i < rows.series.size(); ++i) {
    if (rows.series[i].size() != m) {
      fail(rows.lines[i], "ragged series: " + std::to_string(rows.series[i].size()) + " values, expected " +
                              std::to_string(m));
    }
  }
  if (m == 0) fail(rows.lines.front(), "series has no values");
}

RawRows parse_delimited(std::string_view text) {
  RawRows rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) fail(line_no, "expected a label followed by at least one value");
    const std::string_view label = trim(fields.front());
    if (label.empty()) fail(line_no, "empty label");
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(parse_value(fields[i], line_no));
    rows.series.push_back(std::move(values));
    rows.labels.emplace_back(label);
    rows.lines.push_back(line_no);
  }
  return rows;
}

RawRows parse_ts(std::string_view text) {
  RawRows rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool in_data = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!in_data) {
      if (line.front() != '@') fail(line_no, "expected an @ header line before @data");
      std::string head(line.substr(0, line.find_first_of(" \t")));
      std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
      if (head == "@data") in_data = true;
      continue;
    }
    const auto colon = line.rfind(':');
    if (colon == std::string_view::npos) fail(line_no, "expected 'values:label'");
    const std::string_view body = line.substr(0, colon);
    const std::string_view label = trim(line.substr(colon + 1));
    if (label.empty()) fail(line_no, "empty label");
    if (body.find(':') != std::string_view::npos) fail(line_no, "multivariate series are not supported");
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      values.push_back(
          parse_value(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start),
                      line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.series.push_back(std::move(values));
    rows.labels.emplace_back(label);
    rows.lines.push_back(line_no);
  }
  if (!in_data) throw DataError("missing @data section");
  return rows;
}

bool is_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

Dataset densify(RawRows rows) {
  check_ragged(rows);
  std::set<std::string> distinct(rows.labels.begin(), rows.labels.end());
  std::vector<std::string> names(distinct.begin(), distinct.end());
  if (std::all_of(names.begin(), names.end(), is_number)) {
    std::stable_sort(names.begin(), names.end(),
                     [](const std::string& a, const std::string& b) { return std::stod(a) < std::stod(b); });
  }
  std::map<std::string, ClassId> ids;
  for (std::size_t i = 0; i < names.size(); ++i) ids[names[i]] = static_cast<ClassId>(i);
  if (names.size() < 2) throw DataError("dataset has a single class '" + names.front() + "'");

  const std::size_t n = rows.series.size();
  const std::size_t m = rows.series.front().size();
  std::vector<double> values;
  values.reserve(n * m);
  std::vector<ClassId> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    values.insert(values.end(), rows.series[i].begin(), rows.series[i].end());
    labels.push_back(ids.at(rows.labels[i]));
  }
  Dataset data(SeriesMatrix(n, m, std::move(values)), std::move(labels));
  data.set_label_names(std::move(names));
  return data;
}

RawRows parse_raw(std::string_view text, DataFormat format) {
  return format == DataFormat::Ts ? parse_ts(text) : parse_delimited(text);
}

std::string with_context(const fs::path& path, const std::string& what) { return path.string() + ": " + what; }

RawRows load_raw(const fs::path& path) {
  try {
    return parse_raw(read_file(path), format_for(path));
  } catch (const DataError& e) {
    throw DataError(with_context(path, e.what()));
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Dataset parse_dataset(std::string_view text, DataFormat format) { return densify(parse_raw(text, format)); }

Dataset load_dataset(const fs::path& path) {
  try {
    return densify(load_raw(path));
  } catch (const DataError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw DataError(with_context(path, msg));
  }
}

Dataset load_dataset_pair(const fs::path& first, const fs::path& second) {
  RawRows a = load_raw(first);
  RawRows b = load_raw(second);
  for (std::size_t i = 0; i < b.series.size(); ++i) {
    a.series.push_back(std::move(b.series[i]));
    a.labels.push_back(std::move(b.labels[i]));
    a.lines.push_back(b.lines[i]);
  }
  try {
    return densify(std::move(a));
  } catch (const DataError& e) {
    throw DataError(first.string() + " + " + second.string() + ": " + e.what());
  }
}

std::string format_dataset(const Dataset& data, DataFormat format) {
  const auto& names = data.label_names();
  auto label = [&](ClassId id) {
    return static_cast<std::size_t>(id) < names.size() ? names[static_cast<std::size_t>(id)] : std::to_string(id);
  };
  std::ostringstream os;
  if (format == DataFormat::Ts) {
    os << "@problemName dataset\n@timeStamps false\n@missing false\n@univariate true\n@equalLength true\n"
       << "@seriesLength " << data.length() << "\n@classLabel true";
    for (ClassId id : data.label_space()) os << ' ' << label(id);
    os << "\n@data\n";
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.values().row(i);
    if (format == DataFormat::Ts) {
      for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_value(row[j]);
      os << ':' << label(data.labels()[i]) << '\n';
    } else {
      os << label(data.labels()[i]);
      for (double v : row) os << '\t' << format_value(v);
      os << '\n';
    }
  }
  return os.str();
}

void save_dataset(const Dataset& data, const fs::path& path) {
  write_file_atomic(path, format_dataset(data, format_for(path)));
}

Dataset resolve_dataset(const std::string& ref, const fs::path& data_dir) {
  const fs::path p(ref);
  if (fs::is_regular_file(p)) return load_dataset(p);
  if (!data_dir.empty() && p.is_relative() && fs::is_regular_file(data_dir / p)) return load_dataset(data_dir / p);

  std::vector<fs::path> roots{p.parent_path().empty() ? fs::path(".") : p.parent_path()};
  if (fs::is_directory(p)) roots.push_back(p);
  if (!data_dir.empty()) {
    roots.push_back(data_dir);
    roots.push_back(data_dir / p);
  }
  const std::string name = p.filename().string();
  for (const auto& root : roots) {
    for (const char* ext : {".tsv", ".ts", ".csv", ".txt"}) {
      const fs::path tr = root / (name + "_TRAIN" + ext);
      const fs::path te = root / (name + "_TEST" + ext);
      if (fs::is_regular_file(tr) && fs::is_regular_file(te)) return load_dataset_pair(tr, te);
    }
  }
  throw DataError("dataset '" + ref + "' not found" +
                  (data_dir.empty() ? std::string() : " (also looked under " + data_dir.string() + ")"));
}

// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---
// Dataset selection
// --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- --- ---

std::string to_string(FilterDecision::Status status) {
  switch (status) {
    case FilterDecision::Status::Kept: return "kept";
    case FilterDecision::Status::Excluded: return "excluded";
    case FilterDecision::Status::Unreadable: return "unreadable";
  }
  return "?";
}

std::vector<FilterDecision> filter_datasets(std::span<const CatalogEntry> catalog,
                                            std::span<const Learner* const> learners, std::size_t folds,
                                            double ceiling) {
  std::vector<FilterDecision> out;
  for (const auto& entry : catalog) {
    FilterDecision d;
    d.name = entry.name;
    try {
      const Dataset data = entry.load();
      d.num_classes = data.num_classes();
      if (d.num_classes <= 2) {
        d.status = FilterDecision::Status::Excluded;
        d.reason = "binary";
        out.push_back(std::move(d));
        continue;
      }
      const FoldPlan plan = split_data(data, folds, false, 0);
      bool all_above = !learners.empty();
      for (const Learner* learner : learners) {
        double acc = 0.0;
        for (std::size_t f = 0; f < plan.k; ++f) {
          const Dataset train = data.subset(plan.train_indices(f));
          const Dataset test = data.subset(plan.test_indices(f));
          acc += accuracy(test.labels(), learner->fit(train)->predict(test.values()));
        }
        acc /= static_cast<double>(plan.k);
        d.accuracies.push_back(acc);
        if (!(acc > ceiling)) all_above = false;
      }
      if (all_above) {
        d.status = FilterDecision::Status::Excluded;
        d.reason = "accuracy above ceiling for every classifier";
      }
    } catch (const std::exception& e) {
      d.status = FilterDecision::Status::Unreadable;
      d.reason = e.what();
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace hdc
