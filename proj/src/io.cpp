#include "stm/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace stm {

namespace fs = std::filesystem;

namespace {

bool is_integer_token(const std::string& tok) {
  if (tok.empty()) return false;
  std::size_t i = (tok[0] == '+' || tok[0] == '-') ? 1 : 0;
  if (i == tok.size()) return false;
  for (; i < tok.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
  return true;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

double parse_double(const std::string& tok, const fs::path& path, int lineno) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(tok, &consumed);
    if (consumed != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                          ": cannot parse '" + tok + "' as a number");
  }
}

Index parse_index(const std::string& tok, const fs::path& path, int lineno) {
  if (!is_integer_token(tok))
    throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                          ": cannot parse '" + tok + "' as an integer");
  return static_cast<Index>(std::stoll(tok));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open " + path.string() + " for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out)
      throw ValidationError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw ValidationError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

void write_matrix_tsv(const fs::path& path, const Matrix& m) {
  std::string text;
  text.reserve(static_cast<std::size_t>(m.size()) * 20);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) text += '\t';
      text += format_g17(m(r, c));
    }
    text += '\n';
  }
  write_text_atomic(path, text);
}

void write_matrix_triplet(const fs::path& path, const Matrix& m) {
  std::string text = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0)
        text += std::to_string(r + 1) + " " + std::to_string(c + 1) + " " +
                format_g17(m(r, c)) + "\n";
  write_text_atomic(path, text);
}

Matrix read_matrix(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);

  // Find the first non-blank line to pick the format.
  std::size_t first = 0;
  while (first < lines.size() && tokenize(lines[first]).empty()) ++first;
  if (first == lines.size())
    throw ValidationError(path.string() + ": no matrix data");

  const std::vector<std::string> head = tokenize(lines[first]);
  const bool triplet = head.size() == 2 && is_integer_token(head[0]) &&
                       is_integer_token(head[1]);

  if (triplet) {
    const Index rows = parse_index(head[0], path, static_cast<int>(first + 1));
    const Index cols = parse_index(head[1], path, static_cast<int>(first + 1));
    if (rows < 1 || cols < 1)
      throw ValidationError(path.string() + ": triplet header " +
                            std::to_string(rows) + " x " + std::to_string(cols) +
                            " is not a valid shape");
    Matrix m = Matrix::Zero(rows, cols);
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
      const auto toks = tokenize(lines[li]);
      if (toks.empty()) continue;
      const int lineno = static_cast<int>(li + 1);
      if (toks.size() != 3)
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'row col value'");
      const Index r = parse_index(toks[0], path, lineno);
      const Index c = parse_index(toks[1], path, lineno);
      if (r < 1 || r > rows || c < 1 || c > cols)
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": entry (" + std::to_string(r) + ", " +
                              std::to_string(c) + ") outside " +
                              std::to_string(rows) + " x " + std::to_string(cols));
      m(r - 1, c - 1) = parse_double(toks[2], path, lineno);
    }
    return m;
  }

  std::vector<std::vector<double>> data;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const auto toks = tokenize(lines[li]);
    if (toks.empty()) continue;
    const int lineno = static_cast<int>(li + 1);
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks) row.push_back(parse_double(t, path, lineno));
    if (!data.empty() && row.size() != data.front().size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": ragged row (" + std::to_string(row.size()) +
                            " columns, expected " +
                            std::to_string(data.front().size()) + ")");
    data.push_back(std::move(row));
  }

  Matrix m(static_cast<Index>(data.size()),
           static_cast<Index>(data.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      m(r, c) = data[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

void write_anchors(const fs::path& path, const AnchorPartition& anchors) {
  std::string text;
  for (Index k = 0; k < anchors.topic_count(); ++k) {
    text += std::to_string(k + 1);
    for (Index j : anchors.groups[static_cast<std::size_t>(k)])
      text += " " + std::to_string(j + 1);
    text += '\n';
  }
  write_text_atomic(path, text);
}

AnchorPartition read_anchors(const fs::path& path, Index vocab_size) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<std::pair<Index, std::vector<Index>>> parsed;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto toks = tokenize(lines[li]);
    if (toks.empty()) continue;
    const int lineno = static_cast<int>(li + 1);
    if (toks.size() < 2)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected a topic index and at least one word");
    const Index topic = parse_index(toks[0], path, lineno);
    std::vector<Index> words;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const Index w = parse_index(toks[t], path, lineno);
      if (w < 1 || w > vocab_size)
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": word index " + std::to_string(w) +
                              " outside [1, " + std::to_string(vocab_size) + "]");
      words.push_back(w - 1);
    }
    parsed.emplace_back(topic, std::move(words));
  }
  if (parsed.empty())
    throw ValidationError(path.string() + ": no anchor groups");

  AnchorPartition anchors;
  anchors.groups.resize(parsed.size());
  std::vector<char> seen(parsed.size(), 0);
  for (auto& [topic, words] : parsed) {
    if (topic < 1 || topic > static_cast<Index>(parsed.size()))
      throw ValidationError(path.string() + ": topic index " +
                            std::to_string(topic) + " outside [1, " +
                            std::to_string(parsed.size()) + "]");
    if (seen[static_cast<std::size_t>(topic - 1)])
      throw ValidationError(path.string() + ": topic " + std::to_string(topic) +
                            " listed twice");
    seen[static_cast<std::size_t>(topic - 1)] = 1;
    anchors.groups[static_cast<std::size_t>(topic - 1)] = std::move(words);
  }
  anchors.validate(vocab_size);
  return anchors;
}

CorpusCounts read_counts(const fs::path& path) {
  return CorpusCounts::from_counts(read_matrix(path));
}

}  // namespace stm
