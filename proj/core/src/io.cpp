#include "redistopt/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace redistopt {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path,
                            std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return in;
}

void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

Dataset ingest_libsvm(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<double> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int max_index = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double label;
    if (!(ls >> label)) {
      throw IngestError("libsvm: missing label", line_no);
    }
    std::vector<std::pair<int, double>> row;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw IngestError("libsvm: expected idx:val, got '" + tok + "'", line_no);
      }
      int idx = 0;
      double val = 0.0;
      try {
        idx = std::stoi(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw IngestError("libsvm: malformed idx:val '" + tok + "'", line_no);
      }
      if (idx < 1) {
        throw IngestError("libsvm: index must be >= 1", line_no);
      }
      max_index = std::max(max_index, idx);
      row.emplace_back(idx - 1, val);
    }
    labels.push_back(label);
    rows.push_back(std::move(row));
  }
  Dataset out;
  out.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                       max_index);
  out.targets.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.targets[static_cast<Eigen::Index>(i)] = labels[i];
    for (const auto& [idx, val] : rows[i]) {
      out.features(static_cast<Eigen::Index>(i), idx) = val;
    }
  }
  return out;
}

ObservedMatrix ingest_triples(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  ObservedMatrix out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long row, col;
    double value;
    if (!(ls >> row >> col >> value)) {
      throw IngestError("triples: expected 'row col value'", line_no);
    }
    if (row < 1 || col < 1) {
      throw IngestError("triples: indices are 1-based", line_no);
    }
    out.entries.push_back({static_cast<int>(row - 1),
                           static_cast<int>(col - 1), value});
    out.rows = std::max<Eigen::Index>(out.rows, row);
    out.cols = std::max<Eigen::Index>(out.cols, col);
  }
  out.finalize();
  return out;
}

ImageGrid ingest_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path, std::ios::in | std::ios::binary);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") {
    throw IngestError("pgm: expected P2 or P5 magic", 1);
  }
  const auto next_value = [&in]() {
    // Skips whitespace and '#' comments between header tokens.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string dummy;
        std::getline(in, dummy);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v;
    if (!(in >> v)) throw IngestError("pgm: truncated header", 1);
    return v;
  };
  const long n = next_value();
  const long m = next_value();
  const long maxval = next_value();
  if (maxval != 255) {
    throw IngestError("pgm: only maxval 255 is supported", 1);
  }
  ImageGrid img;
  img.pixels.resize(m, n);
  if (magic == "P2") {
    for (long i = 0; i < m; ++i) {
      for (long j = 0; j < n; ++j) {
        long v;
        if (!(in >> v)) throw IngestError("pgm: truncated pixel data", 1);
        if (v < 0 || v > 255) throw IngestError("pgm: pixel out of range", 1);
        img.pixels(i, j) = static_cast<double>(v) / 255.0;
      }
    }
  } else {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> buf(static_cast<std::size_t>(m) * n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw IngestError("pgm: truncated pixel data", 1);
    }
    for (long i = 0; i < m; ++i) {
      for (long j = 0; j < n; ++j) {
        img.pixels(i, j) = buf[static_cast<std::size_t>(i) * n + j] / 255.0;
      }
    }
  }
  return img;
}

Eigen::MatrixXd ingest_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IngestError("csv: bad number '" + cell + "'", line_no);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IngestError("csv: ragged row", line_no);
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

void write_triples(const std::filesystem::path& path, const ObservedMatrix& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::string line;
  for (const auto& e : data.entries) {
    line.clear();
    line += std::to_string(e.row + 1);
    line += ' ';
    line += std::to_string(e.col + 1);
    line += ' ';
    format_double(line, e.value);
    line += '\n';
    out << line;
  }
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& img) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P2\n" << img.pixels.cols() << " " << img.pixels.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < img.pixels.rows(); ++i) {
    for (Eigen::Index j = 0; j < img.pixels.cols(); ++j) {
      const double clamped = std::min(1.0, std::max(0.0, img.pixels(i, j)));
      out << static_cast<int>(std::lround(clamped * 255.0));
      out << (j + 1 == img.pixels.cols() ? '\n' : ' ');
    }
  }
}

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& x) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::string line;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) line += ',';
      format_double(line, x(i, j));
    }
    line += '\n';
    out << line;
  }
}

void write_csv_vector(const std::filesystem::path& path, const Eigen::VectorXd& x) {
  write_csv_matrix(path, x);
}

void write_factors(const std::filesystem::path& path, const FactoredMatrix& x) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << x.u.rows() << " " << x.rank() << " " << x.v.rows() << "\n";
  const auto dump = [&out](const Eigen::MatrixXd& mat) {
    std::string line;
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      line.clear();
      for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        if (j) line += ' ';
        format_double(line, mat(i, j));
      }
      line += '\n';
      out << line;
    }
  };
  dump(x.u);
  dump(x.b);
  dump(x.v);
}

FactoredMatrix read_factors(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  Eigen::Index m, k, n;
  if (!(in >> m >> k >> n)) throw IngestError("factors: bad shape header", 1);
  FactoredMatrix x;
  x.u.resize(m, k);
  x.b.resize(k, k);
  x.v.resize(n, k);
  const auto load = [&in](Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        if (!(in >> mat(i, j))) throw IngestError("factors: truncated body", 1);
      }
    }
  };
  load(x.u);
  load(x.b);
  load(x.v);
  return x;
}

}  // namespace redistopt
