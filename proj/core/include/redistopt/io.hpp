#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "redistopt/lowrank.hpp"
#include "redistopt/models.hpp"

namespace redistopt {

/// Malformed or out-of-range input; carries the 1-based line number.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& message, int line)
      : std::runtime_error(message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// libsvm text "label idx:val ...", indices 1-based, dimension inferred
/// from the largest index.
Dataset ingest_libsvm(const std::filesystem::path& path);

/// "row col value" triples, 1-based indices, shape inferred.
ObservedMatrix ingest_triples(const std::filesystem::path& path);

/// PGM P2/P5 with maxval 255, normalized into [0, 1].
ImageGrid ingest_pgm(const std::filesystem::path& path);

/// Dense comma-separated matrix.
Eigen::MatrixXd ingest_csv_matrix(const std::filesystem::path& path);

void write_triples(const std::filesystem::path& path, const ObservedMatrix& data);
void write_pgm(const std::filesystem::path& path, const ImageGrid& img);
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& x);
void write_csv_vector(const std::filesystem::path& path, const Eigen::VectorXd& x);

/// Factored matrix as a single text container with a shape header
/// "m k n" followed by the dense U (m x k), B (k x k) and V (n x k).
void write_factors(const std::filesystem::path& path, const FactoredMatrix& x);
FactoredMatrix read_factors(const std::filesystem::path& path);

}  // namespace redistopt
