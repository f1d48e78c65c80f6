#pragma once

#include <filesystem>
#include <string>

#include "idarr/linops.hpp"
#include "idarr/problems.hpp"

namespace idarr::io {

/// 8-bit binary graymap (P5). Pixels are scaled to [0,1].
Matrix read_pgm(const std::filesystem::path& path);
/// Values are clamped to [0,1] and rounded to 8 bits.
void write_pgm(const std::filesystem::path& path, const Matrix& image);

/// Whitespace-separated rows of reals; all rows must have equal length.
Matrix read_text_matrix(const std::filesystem::path& path);

/// Binary vector: the text line "IDARR-VECTOR 1 <n> float64-le" followed
/// by n little-endian doubles. read_vector also accepts plain text
/// numbers.
void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

/// Binary matrix: "IDARR-MATRIX 1 <rows> <cols> float64-le row-major"
/// then the entries. read_matrix also accepts the text grid format.
void write_matrix(const std::filesystem::path& path, const Matrix& a);
Matrix read_matrix(const std::filesystem::path& path);

/// Problem directory: operator.txt, problem.txt, b.vec, b_clean.vec,
/// x_true.vec, weights.vec and the operator payload.
void save_problem(const std::filesystem::path& dir, const TestProblem& problem);
TestProblem load_problem(const std::filesystem::path& dir);

/// Operator described by operator.txt in `dir`.
std::shared_ptr<const LinearMap> load_operator(const std::filesystem::path& dir);

}  // namespace idarr::io
