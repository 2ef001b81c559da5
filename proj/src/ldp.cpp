#include "ldpkit/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldpkit/util.hpp"

namespace ldpkit {

RateFit fit_rate_intercept(const std::vector<double>& eps, const std::vector<double>& y,
                           const std::vector<double>* sigmas) {
  if (eps.size() != y.size() || eps.size() < 2)
    throw config_error("fit_rate_intercept: need >= 2 matching points");
  const std::size_t n = eps.size();
  std::vector<double> w(n, 1.0);
  bool weighted = false;
  if (sigmas) {
    if (sigmas->size() != n) throw config_error("fit_rate_intercept: sigma size mismatch");
    weighted = std::all_of(sigmas->begin(), sigmas->end(), [](double s) { return s > 0; });
    if (weighted)
      for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / ((*sigmas)[i] * (*sigmas)[i]);
  }
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * eps[i];
    swy += w[i] * y[i];
    swxx += w[i] * eps[i] * eps[i];
    swxy += w[i] * eps[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (det <= 0) throw config_error("fit_rate_intercept: degenerate abscissae");
  RateFit fit;
  fit.points_used = int(n);
  fit.rate = (swxx * swy - swx * swxy) / det;
  fit.prefactor = (sw * swxy - swx * swy) / det;
  if (weighted) {
    fit.sigma = std::sqrt(swxx / det);  // exact propagation of the given sigmas
  } else {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - fit.rate - fit.prefactor * eps[i];
      rss += r * r;
    }
    double var = n > 2 ? rss / double(n - 2) : 0.0;
    fit.sigma = std::sqrt(var * swxx / det);
  }
  return fit;
}

SlopeReport ldp_slope(const SpectralTriple& triple, const CoefficientPair& pair,
                      const TargetEvent& event, const std::vector<double>& eps_list,
                      const Vec& x, const TimeGrid& grid, const SlopeOptions& opts) {
  if (eps_list.size() < 3) throw config_error("ldp_slope: need at least 3 epsilon values");
  for (double e : eps_list)
    if (!(e > 0)) throw config_error("ldp_slope: epsilon values must be positive");

  SlopeReport rep;
  if (event.kind == TargetEvent::Kind::PathFunctional) {
    rep.rate_ref_finite = false;
    rep.rate_ref = std::numeric_limits<double>::infinity();
    rep.warnings.push_back("rate_ref skipped: path-functional event has no adjoint");
  } else {
    RateResult ref = minimize_rate(triple, pair, event, x, grid, opts.optimizer);
    rep.rate_ref_finite = ref.feasible;
    rep.rate_ref = ref.value_or_infinity();
    if (!ref.feasible)
      rep.warnings.push_back("rate_ref verdict: +infinity (event unreachable within budget): " +
                             ref.message);
  }

  for (double eps : eps_list) {
    SimOptions sim;
    sim.n_paths = opts.n_paths;
    sim.noise.seed = opts.seed;  // common random numbers across eps
    sim.noise.k_u = opts.k_u;
    sim.threads = opts.threads;
    if (event.kind == TargetEvent::Kind::PathFunctional) sim.functional = event.functional;
    PathEnsemble ens = simulate(triple, pair, eps, x, grid, sim);

    EpsilonRow row;
    row.epsilon = eps;
    row.n_paths = opts.n_paths;
    for (const auto& s : ens.stats) {
      if (s.exploded) {
        ++row.exploded;
        continue;  // a blown-up path counts as a miss
      }
      double v = event.kind == TargetEvent::Kind::PathFunctional
                     ? std::max(0.0, s.functional)
                     : event.endpoint_violation(s.endpoint);
      if (v <= 0.0) ++row.hits;
    }
    row.p_hat = double(row.hits) / row.n_paths;
    WilsonInterval ci = wilson_interval(row.hits, row.n_paths);
    row.wilson_lo = ci.lo;
    row.wilson_hi = ci.hi;
    row.usable = row.hits > 0;
    if (row.usable && row.hits < row.n_paths) {
      row.neg_eps_log_p = -eps * std::log(row.p_hat);
      row.sigma = eps * std::sqrt((1.0 - row.p_hat) / (row.p_hat * row.n_paths));
    } else if (row.usable) {
      row.neg_eps_log_p = 0.0;  // p_hat = 1
      row.sigma = eps * std::sqrt(1.0 / row.n_paths);
    } else {
      std::ostringstream w;
      w << "eps = " << eps << " dropped: zero hits out of " << row.n_paths << " paths";
      rep.warnings.push_back(w.str());
    }
    if (row.exploded > 0) {
      std::ostringstream w;
      w << "eps = " << eps << ": " << row.exploded << " exploded paths counted as misses";
      rep.warnings.push_back(w.str());
    }
    rep.rows.push_back(row);
  }

  // Fit on the two smallest usable eps.
  std::vector<const EpsilonRow*> usable;
  for (const auto& r : rep.rows)
    if (r.usable) usable.push_back(&r);
  if (usable.size() < 2) {
    if (rep.rate_ref_finite) {
      std::ostringstream msg;
      msg << "ldp_slope: fewer than 2 epsilon values with hits (";
      for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (i) msg << ", ";
        msg << "eps " << rep.rows[i].epsilon << ": " << rep.rows[i].hits << "/"
            << rep.rows[i].n_paths;
      }
      msg << "); raise n_paths or use larger eps";
      throw convergence_error(msg.str());
    }
    rep.warnings.push_back("no usable eps and rate_ref = +infinity: consistent verdict");
    return rep;
  }
  std::sort(usable.begin(), usable.end(),
            [](const EpsilonRow* a, const EpsilonRow* b) { return a->epsilon < b->epsilon; });
  std::vector<double> fe, fy, fs;
  for (std::size_t i = 0; i < 2; ++i) {
    fe.push_back(usable[i]->epsilon);
    fy.push_back(usable[i]->neg_eps_log_p);
    fs.push_back(usable[i]->sigma);
  }
  rep.fit = fit_rate_intercept(fe, fy, &fs);
  return rep;
}

LaplaceReport laplace_estimate(const SpectralTriple& triple, const CoefficientPair& pair,
                               const std::function<double(const Trajectory&)>& h, double epsilon,
                               int n_paths, const Vec& x, const TimeGrid& grid,
                               std::uint64_t seed, int threads) {
  if (!h) throw config_error("laplace_estimate: missing functional");
  if (!(epsilon > 0)) throw config_error("laplace_estimate: epsilon must be positive");
  SimOptions sim;
  sim.n_paths = n_paths;
  sim.noise.seed = seed;
  sim.threads = threads;
  sim.functional = h;
  PathEnsemble ens = simulate(triple, pair, epsilon, x, grid, sim);

  LaplaceReport rep;
  std::vector<double> hv;
  hv.reserve(std::size_t(n_paths));
  int exploded = 0;
  for (const auto& s : ens.stats) {
    if (s.exploded) {
      ++exploded;
      continue;
    }
    hv.push_back(s.functional);
  }
  if (exploded > 0) {
    std::ostringstream w;
    w << exploded << " exploded paths dropped";
    rep.warnings.push_back(w.str());
  }
  if (hv.empty()) throw convergence_error("laplace_estimate: every path exploded");
  rep.n_paths = int(hv.size());

  // log-sum-exp against the smallest h (largest weight).
  const double m = *std::min_element(hv.begin(), hv.end());
  double sw = 0, sw2 = 0;
  std::vector<double> w(hv.size());
  for (std::size_t i = 0; i < hv.size(); ++i) {
    w[i] = std::exp(-(hv[i] - m) / epsilon);
    sw += w[i];
    sw2 += w[i] * w[i];
  }
  const double n = double(hv.size());
  rep.estimate = m - epsilon * std::log(sw / n);
  rep.ess = sw * sw / sw2;
  if (rep.ess < 10.0) {
    std::ostringstream wmsg;
    wmsg << "degenerate weights: effective sample size " << rep.ess << " < 10";
    rep.warnings.push_back(wmsg.str());
  }

  // Jackknife the log-mean (delete-one is O(n) from the cached weight sum).
  double jsum = 0, jsum2 = 0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    double est_i = m - epsilon * std::log((sw - w[i]) / (n - 1));
    jsum += est_i;
    jsum2 += est_i * est_i;
  }
  double jmean = jsum / n;
  rep.se = std::sqrt(std::max(0.0, (n - 1) / n * (jsum2 - n * jmean * jmean)));
  return rep;
}

LlnReport lln_check(const SpectralTriple& triple, const CoefficientPair& pair,
                    const std::vector<double>& eps_list, int n_paths, const Vec& x,
                    const TimeGrid& grid, std::uint64_t seed, int threads) {
  if (eps_list.empty()) throw config_error("lln_check: empty epsilon list");

  // Deterministic reference u^0 from the same scheme.
  SimOptions det;
  det.n_paths = 1;
  det.store_paths = true;
  PathEnsemble base = simulate(triple, pair, 0.0, x, grid, det);
  const Trajectory& u0 = base.paths.front();

  LlnReport rep;
  for (double eps : eps_list) {
    SimOptions sim;
    sim.n_paths = n_paths;
    sim.noise.seed = seed;  // common random numbers across eps
    sim.threads = threads;
    sim.reference = &u0;
    PathEnsemble ens = simulate(triple, pair, eps, x, grid, sim);
    std::vector<double> dev;
    dev.reserve(ens.stats.size());
    for (const auto& s : ens.stats) dev.push_back(s.dev_sup_h);
    rep.rows.push_back({eps, median(dev)});
  }

  rep.monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    bool eps_down = rep.rows[i].epsilon < rep.rows[i - 1].epsilon;
    bool dev_down = rep.rows[i].median_dev < rep.rows[i - 1].median_dev;
    if (eps_down != dev_down) rep.monotone = false;
  }
  if (rep.rows.size() >= 2) {
    std::vector<double> le, ld;
    for (const auto& r : rep.rows)
      if (r.epsilon > 0 && r.median_dev > 0) {
        le.push_back(std::log(r.epsilon));
        ld.push_back(std::log(r.median_dev));
      }
    if (le.size() >= 2) rep.slope = fit_line(le, ld).slope;
  }
  return rep;
}

ContinuityReport stochastic_continuity_probe(const SpectralTriple& triple,
                                             const CoefficientPair& pair,
                                             const std::vector<Control>& controls,
                                             const std::vector<double>& eps_list, int n_paths,
                                             const Vec& x, const std::vector<double>& deltas,
                                             std::uint64_t seed, int threads) {
  if (controls.empty()) throw config_error("stochastic_continuity_probe: no controls");
  if (eps_list.empty()) throw config_error("stochastic_continuity_probe: empty epsilon list");
  if (deltas.empty()) throw config_error("stochastic_continuity_probe: empty delta list");

  ContinuityReport rep;
  rep.monotone = true;
  for (std::size_t ci = 0; ci < controls.size(); ++ci) {
    const Control& psi = controls[ci];
    SkeletonResult skel = solve_skeleton(triple, pair, x, psi);
    if (!skel.converged)
      throw convergence_error("stochastic_continuity_probe: skeleton solve failed: " +
                              skel.message);

    // exceed counts per (delta, eps), eps in the given order
    std::vector<std::vector<int>> exceed(deltas.size(), std::vector<int>(eps_list.size(), 0));
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
      SimOptions sim;
      sim.n_paths = n_paths;
      sim.noise.seed = seed;  // common random numbers across eps
      sim.threads = threads;
      sim.control = &psi;
      sim.reference = &skel.u;
      PathEnsemble ens = simulate(triple, pair, eps_list[ei], x, psi.grid, sim);
      for (const auto& s : ens.stats)
        for (std::size_t di = 0; di < deltas.size(); ++di)
          if (s.exploded || s.dev_mr > deltas[di]) ++exceed[di][ei];
    }
    for (std::size_t di = 0; di < deltas.size(); ++di) {
      for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        ContinuityRow row;
        row.control_index = int(ci);
        row.epsilon = eps_list[ei];
        row.delta = deltas[di];
        row.exceed = exceed[di][ei];
        row.n_paths = n_paths;
        row.p_hat = double(row.exceed) / n_paths;
        row.wilson_hi = wilson_interval(row.exceed, n_paths).hi;
        rep.rows.push_back(row);
        if (ei > 0) {
          bool eps_down = eps_list[ei] < eps_list[ei - 1];
          if (eps_down && exceed[di][ei] > exceed[di][ei - 1]) rep.monotone = false;
          if (!eps_down && exceed[di][ei] < exceed[di][ei - 1]) rep.monotone = false;
        }
      }
    }
  }
  return rep;
}

}  // namespace ldpkit
