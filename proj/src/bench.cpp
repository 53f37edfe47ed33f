/*
 * Copyright (C) 2026 The simest authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "simest/bench.hpp"

#include "simest/io.hpp"
#include "simest/kde.hpp"
#include "simest/mdn.hpp"
#include "simest/windows.hpp"

#include <cmath>
#include <limits>

namespace simest {

VectorXd normalize_params(const VectorXd& theta, const std::vector<Bound>& bounds) {
  if (static_cast<std::size_t>(theta.size()) != bounds.size()) {
    throw std::invalid_argument("normalize_params: dimension mismatch");
  }
  VectorXd out(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const Bound& b = bounds[static_cast<std::size_t>(j)];
    if (!(b.lower < b.upper)) throw std::invalid_argument("normalize_params: invalid bound");
    out[j] = (theta[j] - b.lower) / b.width();
  }
  return out;
}

double loss_ls(const VectorXd& theta_true, const VectorXd& theta_hat,
               const std::vector<Bound>& bounds) {
  if (theta_true.size() != theta_hat.size()) throw std::invalid_argument("loss_ls: dimension mismatch");
  return (normalize_params(theta_true, bounds) - normalize_params(theta_hat, bounds)).norm();
}

double PosteriorSummary::mean_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return mu[static_cast<Eigen::Index>(i)];
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

PosteriorSummary summarize(const PosteriorSample& sample, const std::vector<std::string>& names,
                           const std::vector<Bound>& bounds,
                           const std::optional<VectorXd>& theta_true) {
  if (sample.size() == 0) throw std::invalid_argument("summarize: empty sample");
  if (static_cast<std::size_t>(sample.dim()) != names.size() || names.size() != bounds.size()) {
    throw std::invalid_argument("summarize: names, bounds and sample disagree in dimension");
  }
  PosteriorSummary s;
  s.names = names;
  s.bounds = bounds;
  s.mu = posterior_mean(sample);
  s.sigma = posterior_std(sample);
  const auto R = static_cast<Eigen::Index>(sample.restarts.size());
  if (R > 1) {
    MatrixXd means(R, sample.dim());
    for (Eigen::Index r = 0; r < R; ++r) {
      means.row(r) = sample.restarts[static_cast<std::size_t>(r)].colwise().mean();
    }
    const RowVector<double> mu = means.colwise().mean();
    s.sigma_sampling = ((means.rowwise() - mu).array().square().colwise().sum() /
                        static_cast<double>(R - 1))
                           .sqrt()
                           .transpose();
  }
  if (theta_true) {
    s.theta_true = *theta_true;
    s.ls = loss_ls(*theta_true, s.mu, bounds);
  }
  return s;
}

double break_shift(const PosteriorSummary& s, const std::string& after, const std::string& before) {
  return s.mean_of(after) - s.mean_of(before);
}

AggregateMetrics aggregate_metrics(const std::vector<ExperimentPair>& pairs) {
  AggregateMetrics m;
  long ls_wins = 0, err_wins = 0, std_wins = 0;
  for (const auto& p : pairs) {
    const auto& a = p.mdn;
    const auto& b = p.kde;
    if (a.names != b.names || !a.theta_true || !b.theta_true || !a.ls || !b.ls ||
        *a.theta_true != *b.theta_true) {
      throw std::invalid_argument("aggregate_metrics: experiment '" + p.label +
                                  "' is not an aligned MDN/KDE pair with known truth");
    }
    ++m.experiments;
    if (*a.ls < *b.ls) ++ls_wins;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      ++m.parameters;
      const double t = (*a.theta_true)[j];
      if (std::abs(a.mu[j] - t) < std::abs(b.mu[j] - t)) ++err_wins;
      if (a.sigma[j] < b.sigma[j]) ++std_wins;
    }
  }
  if (m.experiments > 0) m.ls_percent = 100.0 * static_cast<double>(ls_wins) / static_cast<double>(m.experiments);
  if (m.parameters > 0) {
    m.error_percent = 100.0 * static_cast<double>(err_wins) / static_cast<double>(m.parameters);
    m.std_percent = 100.0 * static_cast<double>(std_wins) / static_cast<double>(m.parameters);
  }
  return m;
}

namespace {

std::string opt_entry(const std::optional<VectorXd>& v, Eigen::Index j) {
  return v ? format_double((*v)[j]) : std::string();
}

}  // namespace

void write_summary_table(std::ostream& os, const std::vector<ExperimentPair>& pairs) {
  os << "experiment,parameter,true,mdn_mu,mdn_sigma,mdn_sigma_sampling,kde_mu,kde_sigma,"
        "kde_sigma_sampling\n";
  for (const auto& p : pairs) {
    for (Eigen::Index j = 0; j < p.mdn.size(); ++j) {
      os << p.label << ',' << p.mdn.names[static_cast<std::size_t>(j)] << ','
         << opt_entry(p.mdn.theta_true, j) << ',' << format_double(p.mdn.mu[j]) << ','
         << format_double(p.mdn.sigma[j]) << ',' << opt_entry(p.mdn.sigma_sampling, j) << ','
         << format_double(p.kde.mu[j]) << ',' << format_double(p.kde.sigma[j]) << ','
         << opt_entry(p.kde.sigma_sampling, j) << '\n';
    }
    os << p.label << ",LS,," << (p.mdn.ls ? format_double(*p.mdn.ls) : "") << ",,,"
       << (p.kde.ls ? format_double(*p.kde.ls) : "") << ",,\n";
  }
}

void write_aggregate_table(std::ostream& os, const AggregateMetrics& m) {
  os << "metric,value\n"
     << "ls_mdn_lt_ls_kde_percent," << format_double(m.ls_percent) << '\n'
     << "abs_error_mdn_lt_kde_percent," << format_double(m.error_percent) << '\n'
     << "sigma_mdn_lt_kde_percent," << format_double(m.std_percent) << '\n'
     << "experiments," << m.experiments << '\n'
     << "parameters," << m.parameters << '\n';
}

double total_variation(const VectorXd& f1, const VectorXd& f2, double dy) {
  if (f1.size() != f2.size()) throw std::invalid_argument("total_variation: grids differ");
  return 0.5 * (f1 - f2).cwiseAbs().sum() * dy;
}

LagScanResult lag_scan(const LagScanConfig& cfg) {
  if (cfg.lags.empty()) throw std::invalid_argument("lag_scan: no lags requested");
  long max_lag = 0;
  for (long L : cfg.lags) {
    if (L < 1) throw std::invalid_argument("lag_scan: lags must be >= 1");
    max_lag = std::max(max_lag, L);
  }
  if (cfg.window.size() < max_lag) {
    throw std::invalid_argument("lag_scan: conditioning window shorter than the largest lag");
  }
  if (cfg.grid_points < 2) throw std::invalid_argument("lag_scan: grid needs at least 2 points");

  const ParameterVector none({}, VectorXd(0), {});
  Ensemble ens = generate_ensemble(cfg.model, none, cfg.replications, cfg.length, cfg.seed);
  for (auto& rep : ens.replications) rep = preprocess(rep, cfg.preprocessing);
  if (ens.replications.front().dim() != 1) {
    throw std::invalid_argument("lag_scan: univariate models only");
  }

  const PooledSample pooled = pool_samples(ens);
  const auto v = pooled.values.col(0).array();
  const double mean = v.mean();
  const double sd = std::sqrt((v - mean).square().sum() / static_cast<double>(v.size() - 1));
  LagScanResult out;
  out.grid = VectorXd::LinSpaced(cfg.grid_points, mean - cfg.grid_width * sd,
                                 mean + cfg.grid_width * sd);
  const double dy = out.grid[1] - out.grid[0];

  for (long L : cfg.lags) {
    LagCurve curve;
    curve.lag = L;
    try {
      MdnArchitecture arch;
      arch.input_dim = L;
      arch.hidden = cfg.hidden;
      arch.components = cfg.components;
      const auto model = train<double>(build_windows(ens, L), arch, cfg.train);
      const VectorXd x = cfg.window.tail(L);
      curve.density.resize(out.grid.size());
      VectorXd y(1);
      for (Eigen::Index i = 0; i < out.grid.size(); ++i) {
        y[0] = out.grid[i];
        curve.density[i] = eval_density(model, x, y);
      }
      curve.status = "ok";
    } catch (const std::exception& e) {
      curve.status = e.what();
    }
    out.curves.push_back(std::move(curve));
  }

  const auto n = static_cast<Eigen::Index>(out.curves.size());
  out.tv = MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& ca = out.curves[static_cast<std::size_t>(a)];
      const auto& cb = out.curves[static_cast<std::size_t>(b)];
      if (ca.status == "ok" && cb.status == "ok") {
        out.tv(a, b) = total_variation(ca.density, cb.density, dy);
      }
    }
  return out;
}

void write_lag_curves_csv(std::ostream& os, const LagScanResult& r) {
  os << "L,y,density\n";
  for (const auto& c : r.curves) {
    if (c.status != "ok") continue;
    for (Eigen::Index i = 0; i < r.grid.size(); ++i) {
      os << c.lag << ',' << format_double(r.grid[i]) << ',' << format_double(c.density[i]) << '\n';
    }
  }
}

void write_tv_table(std::ostream& os, const LagScanResult& r) {
  os << "L_a,L_b,tv\n";
  for (std::size_t a = 0; a < r.curves.size(); ++a)
    for (std::size_t b = a + 1; b < r.curves.size(); ++b) {
      os << r.curves[a].lag << ',' << r.curves[b].lag << ','
         << format_double(r.tv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) << '\n';
    }
}

}  // namespace simest
