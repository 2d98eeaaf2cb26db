// Whitespace tokenization and GloVe/word2vec-style text embedding files.
#pragma once

#include "seqot/core.hpp"
#include "seqot/embed.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace seqot {

using TokenSequence = std::vector<std::string>;

inline TokenSequence tokenize(std::string_view line) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Reads "token f1 ... fd" lines. A first line of exactly two integers is
/// taken as a "V d" header. `source` names the input in error messages.
inline EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::string> tokens;
  std::vector<double> values;
  long long dim = -1;
  long long header_vocab = -1;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(source + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const TokenSequence fields = tokenize(line);
    if (fields.empty()) continue;
    if (tokens.empty() && header_vocab < 0 && fields.size() == 2) {
      long long v = 0, d = 0;
      if (detail::parse_int(fields[0], v) && detail::parse_int(fields[1], d)) {
        if (v < 1 || d < 1) fail("header must have positive vocabulary size and dimension");
        header_vocab = v;
        dim = d;
        continue;
      }
    }
    const auto d = static_cast<long long>(fields.size()) - 1;
    if (d < 1) fail("token '" + fields[0] + "' has no vector");
    if (dim < 0) dim = d;
    if (d != dim)
      fail("dimension mismatch: expected " + std::to_string(dim) + " values, found " + std::to_string(d));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double x = 0.0;
      if (!detail::parse_double(fields[k], x)) fail("unparseable float '" + fields[k] + "'");
      values.push_back(x);
    }
    tokens.push_back(fields[0]);
  }
  if (tokens.empty()) throw InputError(source + ": no embeddings found");
  if (header_vocab >= 0 && header_vocab != static_cast<long long>(tokens.size()))
    throw InputError(source + ": header declares " + std::to_string(header_vocab) + " tokens, found " +
                     std::to_string(tokens.size()));

  Matrix vectors(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    for (Eigen::Index j = 0; j < vectors.cols(); ++j)
      vectors(i, j) = values[static_cast<std::size_t>(i * vectors.cols() + j)];
  try {
    return EmbeddingTable(std::move(tokens), std::move(vectors));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open embedding file");
  return read_embeddings(in, path);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace seqot
