#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "limsup/error.hpp"

namespace limsup {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;
/// Fixed-width endpoint numerator; wide enough for depth <= 40.
using Numerator = boost::multiprecision::uint512_t;

/// a_n = 1 / (2 (n+1)^2).
Rational gap_fraction(std::size_t n);

/// B_omega with its centered open gap J_omega; |omega| = word.size().
struct CexNode {
  std::string word;
  Rational lo, hi;
  Rational gap_lo, gap_hi;

  Rational length() const { return hi - lo; }
};

/// Binary tree of nested intervals, B_empty = [0, 1], children are the two
/// components of B minus its gap. Nodes are generated on demand: level n
/// endpoints are integers over D_n = 4^n (n!)^2.
class CexTree {
 public:
  explicit CexTree(std::size_t depth);

  std::size_t depth() const { return depth_; }
  /// Common denominator of level-n endpoints.
  const Numerator& denominator(std::size_t n) const { return den_.at(n); }

  CexNode node(const std::string& word) const;
  /// All 2^n nodes of level n in lexicographic order (n <= 20).
  std::vector<CexNode> level(std::size_t n) const;

  /// Depth-first walk of levels 0..max_level; the callback receives the word
  /// length and endpoint numerators over denominator(n).
  void walk(std::size_t max_level, const std::function<void(std::size_t, const Numerator&, const Numerator&)>& fn) const;

 private:
  std::size_t depth_;
  std::vector<Numerator> den_;
};

CexTree build_cex(std::size_t depth);

/// prod_{i<n} (1 - a_i).
Rational level_measure(const CexTree& tree, std::size_t n);
/// Sum of |B_omega| over |omega| = n, by enumerating the intervals.
Rational level_measure_direct(const CexTree& tree, std::size_t n);

struct KappaEstimate {
  Rational partial;  // prod_{i<n_terms} (1 - a_i), an upper bound on kappa
  Rational lower;    // partial * (1 - 1/(2 n_terms)), a lower bound on kappa
  double limit = 0.0;  // sin(pi/sqrt 2) / (pi/sqrt 2)
};

KappaEstimate kappa_estimate(std::size_t n_terms);

/// Exact rational p/q equal to a up to 1e-12 relative, with q <= 10^6.
Rational exponent_rational(double a);

/// Least n with (kappa 2^-n)^a < a_n kappa 2^-n, certified against a bracket
/// of kappa.
std::size_t threshold_level(double a);

struct LevelCheck {
  std::size_t level = 0;
  std::size_t nodes = 0;
  std::size_t exceptions = 0;
  bool symmetric = true;  // every node of the level has the same length
};

struct EmptyLimsupReport {
  double a = 0.0;
  Rational a_exact;
  std::size_t threshold = 0;  // N(a)
  Rational kappa_lower;
  Rational kappa_upper;
  std::size_t depth = 0;
  std::size_t checked = 0;
  std::size_t exceptions = 0;
  std::vector<LevelCheck> levels;

  bool pass() const { return exceptions == 0 && checked > 0; }
};

/// Checks E_omega inside J_omega, hence disjoint from every descendant B_nu,
/// for all N(a) < |omega| <= depth.
EmptyLimsupReport verify_empty_limsup(const CexTree& tree, double a);

nlohmann::json to_json(const EmptyLimsupReport& r);
std::string to_string(const Rational& q);

}  // namespace limsup
