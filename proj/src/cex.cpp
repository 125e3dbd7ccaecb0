#include "limsup/cex.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "limsup/error.hpp"

namespace limsup {

namespace {

constexpr std::size_t kMaxDepth = 40;

Integer widen(const Numerator& v) { return Integer(v); }

// x^e for a rational and a nonnegative integer exponent.
Integer ipow(const Integer& x, unsigned e) {
  Integer out = 1;
  for (unsigned i = 0; i < e; ++i) out *= x;
  return out;
}

Rational rpow(const Rational& x, unsigned e) {
  return Rational(ipow(boost::multiprecision::numerator(x), e), ipow(boost::multiprecision::denominator(x), e));
}

// (kappa 2^-n)^(p-q) < a_n^q, the q-th power of the threshold inequality.
bool threshold_holds(std::size_t n, const Rational& kappa, unsigned p, unsigned q) {
  const Rational base = kappa / Rational(Integer(1) << n);
  return rpow(base, p - q) < rpow(gap_fraction(n), q);
}

// Outward rounding to 64-bit dyadics keeps the bracket valid and the numbers small.
Rational dyadic_floor(const Rational& x) {
  const Integer scale = Integer(1) << 64;
  const Integer num = boost::multiprecision::numerator(x) * scale / boost::multiprecision::denominator(x);
  return Rational(num, scale);
}

Rational dyadic_ceil(const Rational& x) {
  const Rational f = dyadic_floor(x);
  return f == x ? f : f + Rational(Integer(1), Integer(1) << 64);
}

}  // namespace

Rational gap_fraction(std::size_t n) {
  const Integer k = static_cast<unsigned long long>(n + 1);
  return Rational(Integer(1), 2 * k * k);
}

CexTree::CexTree(std::size_t depth) : depth_(depth) {
  require(depth <= kMaxDepth, "counterexample depth must be at most 40");
  den_.push_back(1);
  for (std::size_t n = 0; n <= depth; ++n) {
    const Numerator k = n + 1;
    den_.push_back(den_.back() * 4 * k * k);
  }
}

void CexTree::walk(std::size_t max_level,
                   const std::function<void(std::size_t, const Numerator&, const Numerator&)>& fn) const {
  require(max_level <= depth_, "level exceeds the tree depth");
  // Child endpoints in units of 1/D_{n+1}: the scale factor is 4(n+1)^2 and a
  // child has width w (2(n+1)^2 - 1), so the centered gap has width 2w.
  std::function<void(std::size_t, const Numerator&, const Numerator&)> rec = [&](std::size_t n, const Numerator& lo,
                                                                                  const Numerator& hi) {
    fn(n, lo, hi);
    if (n == max_level) return;
    const Numerator k = n + 1;
    const Numerator m = 4 * k * k;
    const Numerator cw = (hi - lo) * (2 * k * k - 1);
    const Numerator lo0 = lo * m;
    const Numerator hi1 = hi * m;
    rec(n + 1, lo0, lo0 + cw);
    rec(n + 1, hi1 - cw, hi1);
  };
  rec(0, Numerator(0), Numerator(1));
}

CexNode CexTree::node(const std::string& word) const {
  require(word.size() <= depth_, "word is longer than the tree depth");
  Rational lo = 0, hi = 1;
  CexNode out;
  for (std::size_t n = 0;; ++n) {
    const Rational w = hi - lo;
    const Rational half_gap = gap_fraction(n) * w / 2;
    const Rational mid = (lo + hi) / 2;
    if (n == word.size()) {
      out.word = word;
      out.lo = lo;
      out.hi = hi;
      out.gap_lo = mid - half_gap;
      out.gap_hi = mid + half_gap;
      return out;
    }
    require(word[n] == '0' || word[n] == '1', "words are binary strings");
    if (word[n] == '0') {
      hi = mid - half_gap;
    } else {
      lo = mid + half_gap;
    }
  }
}

std::vector<CexNode> CexTree::level(std::size_t n) const {
  require(n <= 20 && n <= depth_, "level must be at most min(20, depth)");
  std::vector<CexNode> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
    std::string w(n, '0');
    for (std::size_t b = 0; b < n; ++b) w[b] = ((i >> (n - 1 - b)) & 1) ? '1' : '0';
    out.push_back(node(w));
  }
  return out;
}

CexTree build_cex(std::size_t depth) { return CexTree(depth); }

Rational level_measure(const CexTree& tree, std::size_t n) {
  require(n <= tree.depth(), "level exceeds the tree depth");
  Rational p = 1;
  for (std::size_t i = 0; i < n; ++i) p *= 1 - gap_fraction(i);
  return p;
}

Rational level_measure_direct(const CexTree& tree, std::size_t n) {
  require(n <= tree.depth(), "level exceeds the tree depth");
  require(n <= 26, "direct summation is limited to level 26");
  Integer sum = 0;
  tree.walk(n, [&](std::size_t k, const Numerator& lo, const Numerator& hi) {
    if (k == n) sum += widen(hi - lo);
  });
  return Rational(sum, widen(tree.denominator(n)));
}

KappaEstimate kappa_estimate(std::size_t n_terms) {
  require(n_terms >= 1, "need at least one term");
  KappaEstimate k;
  k.partial = 1;
  for (std::size_t i = 0; i < n_terms; ++i) k.partial *= 1 - gap_fraction(i);
  // The tail sum of a_i over i >= n is at most 1/(2n), and prod(1 - x) >= 1 - sum x.
  k.lower = k.partial * (1 - Rational(Integer(1), 2 * Integer(static_cast<unsigned long long>(n_terms))));
  const double x = std::numbers::pi / std::sqrt(2.0);
  k.limit = std::sin(x) / x;
  return k;
}

Rational exponent_rational(double a) {
  require(std::isfinite(a) && a > 0.0, "exponent must be positive and finite");
  // Continued-fraction convergents.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = a;
  for (int it = 0; it < 40; ++it) {
    const double f = std::floor(x);
    const auto ai = static_cast<long long>(f);
    const long long h2 = ai * h1 + h0;
    const long long k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - a) <= 1e-12 * a) {
      return Rational(Integer(h1), Integer(k1));
    }
    if (x - f == 0.0) break;
    x = 1.0 / (x - f);
  }
  throw Error(ErrorCode::Unsupported, "exponent has no rational form with denominator <= 10^6");
}

std::size_t threshold_level(double a) {
  require(a > 1.0, "exponent a must exceed 1");
  const Rational ar = exponent_rational(a);
  const auto p = static_cast<unsigned>(boost::multiprecision::numerator(ar));
  const auto q = static_cast<unsigned>(boost::multiprecision::denominator(ar));
  // The inequality is monotone in kappa, so agreement at both ends of a bracket certifies N.
  for (std::size_t terms = 100; terms <= 1600; terms *= 2) {
    const KappaEstimate k = kappa_estimate(terms);
    const Rational k_lo = dyadic_floor(k.lower);
    const Rational k_hi = dyadic_ceil(k.partial);
    std::optional<std::size_t> lo, hi;
    for (std::size_t n = 0; n < 4096 && !(lo && hi); ++n) {
      if (!lo && threshold_holds(n, k_lo, p, q)) lo = n;
      if (!hi && threshold_holds(n, k_hi, p, q)) hi = n;
    }
    require(lo && hi, "threshold scan did not terminate");
    if (*lo == *hi) return *lo;
  }
  throw Error(ErrorCode::Degenerate, "kappa bracket is too wide to certify N(a)");
}

EmptyLimsupReport verify_empty_limsup(const CexTree& tree, double a) {
  require(a > 1.0, "exponent a must exceed 1");
  EmptyLimsupReport rep;
  rep.a = a;
  rep.a_exact = exponent_rational(a);
  rep.depth = tree.depth();
  const KappaEstimate k = kappa_estimate(400);
  rep.kappa_lower = k.lower;
  rep.kappa_upper = k.partial;
  rep.threshold = threshold_level(a);
  if (tree.depth() <= rep.threshold) {
    throw Error(ErrorCode::DepthTooShallow, "depth " + std::to_string(tree.depth()) + " does not exceed N(a) = " +
                                                std::to_string(rep.threshold));
  }
  const auto p = static_cast<unsigned>(boost::multiprecision::numerator(rep.a_exact));
  const auto q = static_cast<unsigned>(boost::multiprecision::denominator(rep.a_exact));

  for (std::size_t n = rep.threshold + 1; n <= tree.depth(); ++n) rep.levels.push_back(LevelCheck{n, 0, 0, true});

  // The verdict depends only on (width, left clearance, right clearance) of a
  // node, so it is evaluated once per distinct triple within a level.
  struct Cached {
    Numerator w, left, right;
    bool ok = false;
    bool set = false;
  };
  std::vector<Cached> cache(tree.depth() + 1);
  auto verdict = [&](std::size_t n, const Numerator& w, const Numerator& left, const Numerator& right) {
    // |B|^a < 2 * clearance, i.e. the open E_omega stays strictly inside the gap on that side.
    const Integer dn = widen(tree.denominator(n));
    const Integer dn1 = widen(tree.denominator(n + 1));
    auto side_ok = [&](const Numerator& c) {
      return ipow(widen(w), p) * ipow(dn1, q) < ipow(widen(c), q) * ipow(dn, p);
    };
    return side_ok(left) && side_ok(right);
  };

  tree.walk(tree.depth(), [&](std::size_t n, const Numerator& lo, const Numerator& hi) {
    if (n <= rep.threshold) return;
    LevelCheck& lc = rep.levels[n - rep.threshold - 1];
    const Numerator kk = n + 1;
    const Numerator m = 4 * kk * kk;
    const Numerator w = hi - lo;
    const Numerator cw = w * (2 * kk * kk - 1);
    const Numerator gap_lo = lo * m + cw;
    const Numerator gap_hi = hi * m - cw;
    const Numerator mid2 = (lo + hi) * m;  // twice the midpoint, in units of 1/D_{n+1}
    const Numerator left = mid2 - 2 * gap_lo;
    const Numerator right = 2 * gap_hi - mid2;
    Cached& c = cache[n];
    bool ok = false;
    if (c.set && c.w == w && c.left == left && c.right == right) {
      ok = c.ok;
    } else {
      ok = verdict(n, w, left, right);
      if (c.set) lc.symmetric = false;
      c = Cached{w, left, right, ok, true};
    }
    ++lc.nodes;
    ++rep.checked;
    if (!ok) {
      ++lc.exceptions;
      ++rep.exceptions;
    }
  });
  return rep;
}

std::string to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

nlohmann::json to_json(const EmptyLimsupReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"level", l.level}, {"nodes", l.nodes}, {"exceptions", l.exceptions}, {"symmetric", l.symmetric}});
  }
  return {{"a", r.a},
          {"a_exact", to_string(r.a_exact)},
          {"threshold", r.threshold},
          {"kappa_lower", r.kappa_lower.convert_to<double>()},
          {"kappa_upper", r.kappa_upper.convert_to<double>()},
          {"depth", r.depth},
          {"checked", r.checked},
          {"exceptions", r.exceptions},
          {"levels", levels},
          {"pass", r.pass()}};
}

}  // namespace limsup
