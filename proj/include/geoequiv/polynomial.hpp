#pragma once

// Homogeneous polynomials in the fiber variables u_1..u_n with dense coefficient tables.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "geoequiv/errors.hpp"

namespace geoequiv {

using Exponents = std::vector<int>;

namespace detail {

inline void enumerate_monomials(std::size_t vars, int degree, std::size_t at, Exponents& cur,
                                std::vector<Exponents>& out) {
  if (at + 1 == vars) {
    cur[at] = degree;
    out.push_back(cur);
    return;
  }
  for (int e = degree; e >= 0; --e) {
    cur[at] = e;
    enumerate_monomials(vars, degree - e, at + 1, cur, out);
  }
}

struct MonomialTable {
  std::vector<Exponents> list;
  std::map<Exponents, std::size_t> index;
};

inline std::shared_ptr<const MonomialTable> monomial_table(std::size_t vars, int degree) {
  auto t = std::make_shared<MonomialTable>();
  if (vars == 0) {
    if (degree == 0) t->list.push_back({});
  } else {
    Exponents cur(vars, 0);
    enumerate_monomials(vars, degree, 0, cur, t->list);
  }
  for (std::size_t i = 0; i < t->list.size(); ++i) t->index[t->list[i]] = i;
  return t;
}

}  // namespace detail

class FiberPolynomial {
 public:
  FiberPolynomial() : FiberPolynomial(1, 0) {}
  FiberPolynomial(std::size_t vars, int degree)
      : vars_(vars), degree_(degree), table_(detail::monomial_table(vars, degree)),
        coeff_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table_->list.size()))) {
    if (degree < 0) throw ArgumentError("negative degree");
  }

  std::size_t vars() const { return vars_; }
  int degree() const { return degree_; }
  std::size_t size() const { return table_->list.size(); }
  const std::vector<Exponents>& monomials() const { return table_->list; }
  const Eigen::VectorXd& coefficients() const { return coeff_; }
  Eigen::VectorXd& coefficients() { return coeff_; }

  double coeff(const Exponents& e) const { return coeff_[index(e)]; }
  double& coeff(const Exponents& e) { return coeff_[index(e)]; }

  /// Adds c * u_{i1} * u_{i2} * ... ; the number of indices must equal the degree.
  void add(std::initializer_list<std::size_t> vars, double c) {
    if (static_cast<int>(vars.size()) != degree_) throw ArgumentError("term degree mismatch");
    Exponents e(vars_, 0);
    for (std::size_t v : vars) {
      if (v >= vars_) throw ArgumentError("variable index out of range");
      ++e[v];
    }
    coeff(e) += c;
  }

  double evaluate(const Eigen::VectorXd& u) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      double c = coeff_[static_cast<Eigen::Index>(k)];
      if (c == 0.0) continue;
      double t = c;
      for (std::size_t i = 0; i < vars_; ++i)
        for (int p = 0; p < table_->list[k][i]; ++p) t *= u[static_cast<Eigen::Index>(i)];
      s += t;
    }
    return s;
  }

  double norm() const { return coeff_.norm(); }
  double max_abs() const { return coeff_.size() ? coeff_.cwiseAbs().maxCoeff() : 0.0; }

  FiberPolynomial operator*(const FiberPolynomial& o) const {
    if (o.vars_ != vars_) throw ArgumentError("variable count mismatch");
    FiberPolynomial r(vars_, degree_ + o.degree_);
    Exponents e(vars_);
    for (std::size_t a = 0; a < size(); ++a) {
      double ca = coeff_[static_cast<Eigen::Index>(a)];
      if (ca == 0.0) continue;
      for (std::size_t b = 0; b < o.size(); ++b) {
        double cb = o.coeff_[static_cast<Eigen::Index>(b)];
        if (cb == 0.0) continue;
        for (std::size_t i = 0; i < vars_; ++i) e[i] = table_->list[a][i] + o.table_->list[b][i];
        r.coeff(e) += ca * cb;
      }
    }
    return r;
  }

  FiberPolynomial operator+(const FiberPolynomial& o) const {
    same_shape(o);
    FiberPolynomial r = *this;
    r.coeff_ += o.coeff_;
    return r;
  }
  FiberPolynomial operator-(const FiberPolynomial& o) const {
    same_shape(o);
    FiberPolynomial r = *this;
    r.coeff_ -= o.coeff_;
    return r;
  }
  FiberPolynomial operator*(double s) const {
    FiberPolynomial r = *this;
    r.coeff_ *= s;
    return r;
  }

  /// Human-readable form, e.g. "2*u1^3 - u1*u2^2".
  std::string to_string() const {
    std::string out;
    char buf[40];
    for (std::size_t k = 0; k < size(); ++k) {
      double c = coeff_[static_cast<Eigen::Index>(k)];
      if (c == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.10g", std::abs(c));
      out += out.empty() ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
      std::string mono;
      for (std::size_t i = 0; i < vars_; ++i) {
        int p = table_->list[k][i];
        if (p == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += "u" + std::to_string(i + 1);
        if (p > 1) mono += "^" + std::to_string(p);
      }
      if (mono.empty())
        out += buf;
      else if (std::abs(c) == 1.0)
        out += mono;
      else
        out += std::string(buf) + "*" + mono;
    }
    return out.empty() ? "0" : out;
  }

 private:
  Eigen::Index index(const Exponents& e) const {
    auto it = table_->index.find(e);
    if (it == table_->index.end()) throw ArgumentError("monomial not of the polynomial's degree");
    return static_cast<Eigen::Index>(it->second);
  }
  void same_shape(const FiberPolynomial& o) const {
    if (o.vars_ != vars_ || o.degree_ != degree_) throw ArgumentError("polynomial shape mismatch");
  }

  std::size_t vars_;
  int degree_;
  std::shared_ptr<const detail::MonomialTable> table_;
  Eigen::VectorXd coeff_;
};

struct Division {
  FiberPolynomial quotient;
  double residual = 0.0;  // coefficient-norm of dividend - quotient * divisor
  double scale = 0.0;     // max of dividend and divisor norms
  bool holds = false;
};

/// Least-squares division: the quotient minimizes the coefficient norm of the remainder.
inline Division divide(const FiberPolynomial& dividend, const FiberPolynomial& divisor, double tol) {
  if (dividend.vars() != divisor.vars()) throw ArgumentError("variable count mismatch");
  int qd = dividend.degree() - divisor.degree();
  if (qd < 0) throw ArgumentError("divisor degree exceeds dividend degree");
  Division d;
  d.quotient = FiberPolynomial(dividend.vars(), qd);
  std::size_t cols = d.quotient.size();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(dividend.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    FiberPolynomial mono(dividend.vars(), qd);
    mono.coefficients()[static_cast<Eigen::Index>(c)] = 1.0;
    A.col(static_cast<Eigen::Index>(c)) = (mono * divisor).coefficients();
  }
  const Eigen::VectorXd& b = dividend.coefficients();
  d.quotient.coefficients() = A.colPivHouseholderQr().solve(b);
  d.residual = (b - A * d.quotient.coefficients()).norm();
  d.scale = std::max(dividend.norm(), divisor.norm());
  d.holds = d.residual <= tol * std::max(d.scale, 1e-300);
  return d;
}

}  // namespace geoequiv
