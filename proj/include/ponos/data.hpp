#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ponos/errors.hpp"
#include "ponos/rng.hpp"
#include "ponos/vec.hpp"

namespace ponos {

struct Dataset {
  std::vector<Vector> features;
  Vector labels;
  std::size_t dim = 0;

  std::size_t size() const { return labels.size(); }
};

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& tok, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "cannot parse number '" + tok + "'");
  }
}

}  // namespace detail

// Dense CSV, one sample per row, last column is the label.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open file '" + path + "'");
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::strip(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(stripped);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(detail::parse_double(detail::strip(tok), line_no));
    if (row.size() < 2) throw ParseError(line_no, "need at least one feature and a label");
    if (ds.dim == 0) ds.dim = row.size() - 1;
    if (row.size() - 1 != ds.dim)
      throw ParseError(line_no, "row has " + std::to_string(row.size() - 1) +
                                    " features, expected " + std::to_string(ds.dim));
    ds.labels.push_back(row.back());
    row.pop_back();
    ds.features.push_back(std::move(row));
  }
  if (ds.size() == 0) throw ParseError(line_no, "file holds no samples");
  return ds;
}

// LIBSVM sparse text format: "label index:value index:value ...", 1-based
// feature indices. Missing entries are zero.
inline Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open file '" + path + "'");
  std::vector<std::vector<std::pair<std::size_t, double>>> sparse_rows;
  Vector labels;
  std::size_t max_index = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::strip(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::stringstream ss(stripped);
    std::string tok;
    ss >> tok;
    labels.push_back(detail::parse_double(tok, line_no));
    std::vector<std::pair<std::size_t, double>> row;
    while (ss >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected index:value, got '" + tok + "'");
      std::size_t index = 0;
      try {
        index = std::stoul(tok.substr(0, colon));
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad feature index in '" + tok + "'");
      }
      if (index == 0) throw ParseError(line_no, "feature indices are 1-based");
      max_index = std::max(max_index, index);
      row.emplace_back(index - 1, detail::parse_double(tok.substr(colon + 1), line_no));
    }
    sparse_rows.push_back(std::move(row));
  }
  if (labels.empty()) throw ParseError(line_no, "file holds no samples");
  Dataset ds;
  ds.dim = max_index;
  ds.labels = std::move(labels);
  ds.features.reserve(sparse_rows.size());
  for (const auto& row : sparse_rows) {
    Vector dense(max_index, 0.0);
    for (const auto& [i, v] : row) dense[i] = v;
    ds.features.push_back(std::move(dense));
  }
  return ds;
}

// Shuffled split; the split seed is exposed to the caller because the exact
// shuffle is a config choice, not a dataset property.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::substream(seed, 0x5711);
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t train_count = std::min(
      ds.size(), static_cast<std::size_t>(train_fraction * static_cast<double>(ds.size()) + 0.5));
  Dataset train, test;
  train.dim = test.dim = ds.dim;
  for (std::size_t j = 0; j < order.size(); ++j) {
    Dataset& dst = j < train_count ? train : test;
    dst.features.push_back(ds.features[order[j]]);
    dst.labels.push_back(ds.labels[order[j]]);
  }
  return {std::move(train), std::move(test)};
}

// Two-cluster Gaussian blobs with labels -1/+1; separation is the distance
// between the cluster means along each coordinate.
inline Dataset make_binary_blobs(std::uint64_t seed, std::size_t samples, std::size_t dim,
                                 double separation) {
  Rng rng = Rng::substream(seed, 0xB10B);
  Dataset ds;
  ds.dim = dim;
  for (std::size_t i = 0; i < samples; ++i) {
    const double label = (i % 2 == 0) ? 1.0 : -1.0;
    Vector x(dim);
    for (double& v : x) v = rng.normal() + 0.5 * label * separation;
    ds.features.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  return ds;
}

// Multi-class blobs with integer labels 0..classes-1; class means sit on a
// circle of radius `separation` in the first two coordinates.
inline Dataset make_multiclass_blobs(std::uint64_t seed, std::size_t samples, std::size_t dim,
                                     std::size_t classes, double separation) {
  Rng rng = Rng::substream(seed, 0xB10C);
  Dataset ds;
  ds.dim = dim;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t label = i % classes;
    const double angle =
        6.283185307179586 * static_cast<double>(label) / static_cast<double>(classes);
    Vector x(dim);
    for (double& v : x) v = rng.normal();
    x[0] += separation * std::cos(angle);
    if (dim > 1) x[1] += separation * std::sin(angle);
    ds.features.push_back(std::move(x));
    ds.labels.push_back(static_cast<double>(label));
  }
  return ds;
}

inline std::vector<int> labels_as_classes(const Dataset& ds) {
  std::vector<int> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = static_cast<int>(ds.labels[i]);
  return out;
}

// Maps a two-valued label column onto {-1,+1} (lower value -> -1). Throws
// ValidationError when there are not exactly two distinct labels.
inline Vector labels_as_binary(const Dataset& ds) {
  Vector distinct;
  for (double y : ds.labels) {
    if (std::find(distinct.begin(), distinct.end(), y) == distinct.end()) distinct.push_back(y);
    if (distinct.size() > 2) throw ValidationError("labels", "more than two distinct labels");
  }
  if (distinct.size() != 2) throw ValidationError("labels", "need exactly two distinct labels");
  std::sort(distinct.begin(), distinct.end());
  Vector out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = ds.labels[i] == distinct[0] ? -1.0 : 1.0;
  return out;
}

}  // namespace ponos
