#pragma once

#include <filesystem>
#include <string>

#include "stm/types.hpp"

namespace stm {

/// Formats a double with 17 significant digits (lossless round trip).
std::string format_g17(double v);

/// Writes text to path via a temporary file in the same directory followed
/// by an atomic rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

/// Dense TSV, one row per line, 17 significant digits.
void write_matrix_tsv(const std::filesystem::path& path, const Matrix& m);

/// Sparse triplet text: header line "rows cols", then "row col value" with
/// 1-based indices; entries not listed are zero.
void write_matrix_triplet(const std::filesystem::path& path, const Matrix& m);

/// Reads either format, auto-detected: a first line of exactly two integer
/// tokens marks a triplet file, anything else is dense TSV.
Matrix read_matrix(const std::filesystem::path& path);

/// One line per topic: topic index followed by its anchor word indices,
/// all 1-based.
void write_anchors(const std::filesystem::path& path,
                   const AnchorPartition& anchors);

AnchorPartition read_anchors(const std::filesystem::path& path,
                             Index vocab_size);

/// Reads a count matrix (either matrix format) and derives document lengths.
CorpusCounts read_counts(const std::filesystem::path& path);

}  // namespace stm
