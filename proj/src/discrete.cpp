#include "fts/discrete.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace fts {

namespace {

// Uniform in the unit ball mapped through Gamma^{-1/2}.
Mat sample_ellipsoid(const Mat& gamma, std::size_t m, std::mt19937_64& rng) {
  const auto n = static_cast<int>(gamma.rows());
  Mat dirs = sphere_directions(n, m, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
    dirs.col(j) *= std::pow(u(rng), 1.0 / n);
  }
  return inverse_sqrt_spd(gamma) * dirs;
}

}  // namespace

void DiscreteDomainSeq::validate() const {
  const int n = dim();
  if (n < 1) throw InputError("initial set has no dimension");
  if (gamma.size() < 2) throw InputError("discrete horizon must be at least 1");
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    const Mat& g = gamma[k];
    if (g.rows() != n || g.cols() != n) {
      throw InputError("Gamma_" + std::to_string(k) + " has the wrong shape");
    }
    Eigen::LLT<Mat> llt(0.5 * (g + g.transpose()));
    if (llt.info() != Eigen::Success) {
      throw DomainError("Gamma_" + std::to_string(k) + " is not positive definite");
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(omega0.r_matrix - gamma.front(), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw DomainError("initial set is not inside Omega_0");
  }
}

DiscreteDomainSeq make_geometric_balls(int n, double r_initial, double r0, double ratio,
                                       int horizon) {
  if (n < 1 || horizon < 1) throw InputError("need n >= 1 and horizon >= 1");
  if (!(r_initial > 0.0) || !(r0 > 0.0) || !(ratio > 0.0)) {
    throw InputError("radii and ratio must be positive");
  }
  DiscreteDomainSeq seq;
  seq.omega0.r_matrix = Mat::Identity(n, n) / (r_initial * r_initial);
  for (int k = 0; k <= horizon; ++k) {
    double r = r0 * std::pow(ratio, k);
    seq.gamma.push_back(Mat::Identity(n, n) / (r * r));
  }
  return seq;
}

DiscreteMap make_scaling_map(int n, double factor) {
  if (factor == 0.0) throw InputError("scaling factor must be non-zero");
  DiscreteMap map;
  map.dim = n;
  map.step = [factor](int, const Vec& x) { return (factor * x).eval(); };
  map.inverse = [factor](int, const Vec& x) { return (x / factor).eval(); };
  return map;
}

std::size_t ForwardSample::count(ForwardTag tag) const {
  std::size_t c = 0;
  for (auto t : tags) c += (t == tag) ? 1 : 0;
  return c;
}

ForwardSample forward_set_sample(const DiscreteMap& map, const DiscreteDomainSeq& seq, int k,
                                 std::size_t m, std::uint64_t rng_seed) {
  if (k < 0 || k >= seq.horizon()) throw InputError("k must satisfy 0 <= k < N");
  if (map.dim != seq.dim()) throw InputError("map/domain dimension mismatch");
  std::mt19937_64 rng(rng_seed);
  Mat inside = sample_ellipsoid(seq.gamma[k], m, rng);
  EllipsoidFamily fam(seq.dim(), [g = seq.gamma[k]](double) { return g; }, "snapshot");
  Mat edge = fam.boundary_sample(0.0, m, rng);

  std::vector<Vec> pts;
  std::vector<Vec> pre;
  ForwardSample out;
  for (Eigen::Index j = 0; j < inside.cols(); ++j) {
    Vec y = map.step(k, inside.col(j));
    if (!(seq.level(k + 1, y) < 1.0)) {
      pts.push_back(y);
      pre.push_back(inside.col(j));
      out.tags.push_back(ForwardTag::escaped_image);
    }
  }
  for (Eigen::Index j = 0; j < edge.cols(); ++j) {
    pts.push_back(map.step(k, edge.col(j)));
    pre.push_back(edge.col(j));
    out.tags.push_back(ForwardTag::boundary_image);
  }
  out.points.resize(seq.dim(), static_cast<Eigen::Index>(pts.size()));
  out.preimages.resize(seq.dim(), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    out.points.col(static_cast<Eigen::Index>(j)) = pts[j];
    out.preimages.col(static_cast<Eigen::Index>(j)) = pre[j];
  }
  return out;
}

DiscreteV discrete_v_from_net(const LyapunovNet& net) {
  return [net](int k, const Vec& x) { return forward(net, static_cast<double>(k), x); };
}

DtSamples sample_dt(const DiscreteMap& map, const DiscreteDomainSeq& seq, std::size_t m,
                    std::uint64_t rng_seed) {
  seq.validate();
  if (m == 0) throw InputError("sample count must be positive");
  DtSamples s;
  for (int k = 0; k < seq.horizon(); ++k) {
    std::mt19937_64 rng(derive_seed(rng_seed, static_cast<std::uint64_t>(3 * k)));
    s.interior.push_back(sample_ellipsoid(seq.gamma[k], m, rng));
    s.forward.push_back(
        forward_set_sample(map, seq, k, m, derive_seed(rng_seed, static_cast<std::uint64_t>(3 * k + 1))));
  }
  DomainSpec dom;
  dom.initial = seq.omega0;
  dom.trajectory = make_constant_family(seq.gamma.front());
  s.initial = sample_initial(dom, m, derive_seed(rng_seed, 0xffffULL));
  return s;
}

DtVerdict check_dt_on_samples(const DiscreteV& v, const DiscreteMap& map,
                              const DiscreteDomainSeq& seq, const DtSamples& samples) {
  if (!v) throw InputError("V is empty");
  if (samples.interior.size() != static_cast<std::size_t>(seq.horizon()) ||
      samples.forward.size() != samples.interior.size()) {
    throw InputError("sample set does not match the horizon");
  }
  if (samples.initial.cols() == 0) throw InputError("no initial-set samples");
  DtVerdict out;
  out.decrease_ok = true;
  for (int k = 0; k < seq.horizon(); ++k) {
    const Mat& pts = samples.interior[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      Vec x = pts.col(j);
      double dv = v(k + 1, map.step(k, x)) - v(k, x);
      ++out.n_decrease_checks;
      if (!(dv <= 0.0)) {
        out.decrease_ok = false;
        out.violations.push_back({DtViolation::Kind::increase, k, x, dv});
      }
    }
  }

  out.sup_initial = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < samples.initial.cols(); ++j) {
    out.sup_initial = std::max(out.sup_initial, v(0, samples.initial.col(j)));
  }
  out.inf_forward = std::numeric_limits<double>::infinity();
  for (int k = 0; k < seq.horizon(); ++k) {
    const ForwardSample& fw = samples.forward[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < fw.points.cols(); ++j) {
      Vec y = fw.points.col(j);
      double value = v(k + 1, y);
      ++out.n_forward_points;
      out.inf_forward = std::min(out.inf_forward, value);
      if (!(out.sup_initial < value)) {
        out.violations.push_back({DtViolation::Kind::gap, k, y, out.sup_initial - value});
      }
    }
  }
  out.gap_ok = out.sup_initial < out.inf_forward;
  out.passed = out.decrease_ok && out.gap_ok;
  return out;
}

DtVerdict check_dt_conditions(const DiscreteV& v, const DiscreteMap& map,
                              const DiscreteDomainSeq& seq, std::size_t m,
                              std::uint64_t rng_seed) {
  return check_dt_on_samples(v, map, seq, sample_dt(map, seq, m, rng_seed));
}

std::string dt_verdict_json(const DtVerdict& verdict) {
  using nlohmann::json;
  constexpr std::size_t kMaxListed = 100;
  json listed = json::array();
  for (std::size_t i = 0; i < verdict.violations.size() && i < kMaxListed; ++i) {
    const auto& v = verdict.violations[i];
    listed.push_back({{"kind", v.kind == DtViolation::Kind::increase ? "increase" : "gap"},
                      {"k", v.k},
                      {"x", std::vector<double>(v.x.data(), v.x.data() + v.x.size())},
                      {"value", v.value}});
  }
  json doc = {{"passed", verdict.passed},
              {"decrease_condition", verdict.decrease_ok},
              {"gap_condition", verdict.gap_ok},
              {"sup_initial", verdict.sup_initial},
              {"n_decrease_checks", verdict.n_decrease_checks},
              {"n_forward_points", verdict.n_forward_points},
              {"n_violations", verdict.violations.size()},
              {"violations", listed}};
  if (std::isfinite(verdict.inf_forward)) {
    doc["inf_forward"] = verdict.inf_forward;
  } else {
    doc["inf_forward"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

}  // namespace fts
