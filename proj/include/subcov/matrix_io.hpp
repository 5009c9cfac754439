#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "subcov/subspace.hpp"
#include "subcov/types.hpp"

namespace subcov {

// Text matrix layout, shared by subspace caches, estimate outputs and the
// direct-covariance input:
//
//   SUBCOV-MATRIX 1
//   <rows> <cols>
//   <re> <im> <re> <im> ...     (one matrix row per line, 2*cols numbers)
//
// Values are written with shortest round-trip formatting, so save/load is
// bit-exact for doubles.

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& token, const std::string& context) {
  double v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw std::runtime_error("matrix file: bad number '" + token + "' in " + context);
  return v;
}

}  // namespace detail

inline void save_matrix(std::ostream& out, const CMatrixXd& m) {
  out << "SUBCOV-MATRIX 1\n" << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << detail::format_double(m(i, j).real()) << ' '
          << detail::format_double(m(i, j).imag());
    }
    out << '\n';
  }
}

inline void save_matrix(const std::filesystem::path& path, const CMatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  save_matrix(out, m);
}

inline CMatrixXd load_matrix(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "SUBCOV-MATRIX" || version != 1)
    throw std::runtime_error("matrix file: missing SUBCOV-MATRIX 1 header");
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw std::runtime_error("matrix file: bad dimensions");
  CMatrixXd m(rows, cols);
  std::string tok_re, tok_im;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> tok_re >> tok_im))
        throw std::runtime_error("matrix file: truncated value section");
      m(i, j) = {detail::parse_double(tok_re, "matrix entry"),
                 detail::parse_double(tok_im, "matrix entry")};
    }
  return m;
}

inline CMatrixXd load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path.string());
  return load_matrix(in);
}

// Subspace cache: the basis plus the full eigen-spectrum and geometry tag,
// so expensive S accumulations are shared across harness runs.
//
//   SUBCOV-SUBSPACE 1
//   tag <geometry_tag>
//   dim <d>
//   eigenvalues <N^2 numbers>
//   <matrix block as above>

inline void save_subspace(const std::filesystem::path& path, const CorrelationSubspaced& sub) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "SUBCOV-SUBSPACE 1\n";
  out << "tag " << (sub.geometry_tag.empty() ? "-" : sub.geometry_tag) << '\n';
  out << "dim " << sub.dim << '\n';
  out << "eigenvalues";
  for (Eigen::Index i = 0; i < sub.eigenvalues.size(); ++i)
    out << ' ' << detail::format_double(sub.eigenvalues[i]);
  out << '\n';
  save_matrix(out, sub.basis);
}

inline CorrelationSubspaced load_subspace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open subspace file: " + path.string());
  std::string magic, word;
  int version = 0;
  if (!(in >> magic >> version) || magic != "SUBCOV-SUBSPACE" || version != 1)
    throw std::runtime_error("subspace file: missing SUBCOV-SUBSPACE 1 header");
  CorrelationSubspaced sub;
  if (!(in >> word >> sub.geometry_tag) || word != "tag")
    throw std::runtime_error("subspace file: missing tag line");
  if (sub.geometry_tag == "-") sub.geometry_tag.clear();
  if (!(in >> word >> sub.dim) || word != "dim" || sub.dim < 1)
    throw std::runtime_error("subspace file: missing dim line");
  if (!(in >> word) || word != "eigenvalues")
    throw std::runtime_error("subspace file: missing eigenvalues line");
  std::vector<double> eigs;
  // eigenvalue count equals the basis row count, which we only learn below;
  // read tokens until the matrix header shows up
  std::string tok;
  while (in >> tok && tok != "SUBCOV-MATRIX")
    eigs.push_back(detail::parse_double(tok, "eigenvalues"));
  if (tok != "SUBCOV-MATRIX") throw std::runtime_error("subspace file: missing matrix block");
  for (auto it = tok.rbegin(); it != tok.rend(); ++it) in.putback(*it);
  sub.basis = load_matrix(in);
  sub.eigenvalues = Eigen::Map<const VectorXd>(eigs.data(), static_cast<Eigen::Index>(eigs.size()));
  if (sub.basis.cols() != sub.dim)
    throw std::runtime_error("subspace file: dim does not match basis columns");
  if (sub.eigenvalues.size() != sub.basis.rows())
    throw std::runtime_error("subspace file: eigenvalue count does not match N^2");
  return sub;
}

}  // namespace subcov
