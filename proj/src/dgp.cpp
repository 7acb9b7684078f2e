#include "candlekit/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "candlekit/parallel.hpp"

namespace candlekit {

void DgpConfig::validate() const {
  if (!(kappa1 > 0 && kappa2 > 0)) fail(ErrorKind::Validation, "mean-reversion speeds must be positive");
  if (!(theta1 > 0 && theta2 > 0)) fail(ErrorKind::Validation, "long-run variances must be positive");
  if (!(xi1 >= 0 && xi2 >= 0)) fail(ErrorKind::Validation, "vol-of-vol must be nonnegative");
  if (!(std::abs(gamma) <= 1)) fail(ErrorKind::Validation, "|gamma| must not exceed 1");
  if (!std::isfinite(beta_constant)) fail(ErrorKind::Validation, "non-finite constant beta");
  if (candles_per_day < 1 || euler_steps_per_day < candles_per_day ||
      euler_steps_per_day % candles_per_day != 0) {
    fail(ErrorKind::Validation, "Euler steps per day must be a multiple of candles per day");
  }
  if (kSessionSeconds % candles_per_day != 0) {
    fail(ErrorKind::Validation, "candles must split the session into whole seconds");
  }
  if (!(log_price_scale > 0)) fail(ErrorKind::Validation, "log-price scale must be positive");
  if (!(initial_price > 0)) fail(ErrorKind::Validation, "initial price must be positive");
}

double dgp_idio_ratio(double t) {
  const double s = std::sin(t);
  return 1.5 + 0.25 * s * s;
}

double dgp_beta(const DgpConfig& cfg, double t) {
  if (cfg.beta_path == BetaPath::Constant) return cfg.beta_constant;
  const double s = std::sin(t);
  return 1.0 + 0.25 * s * s;
}

SimulatedDay simulate_day(const DgpConfig& cfg, std::uint64_t replication, const DayOptions& opts) {
  cfg.validate();
  const int per_candle = cfg.steps_per_candle();
  const int n_candles = opts.n_candles < 0 ? cfg.candles_per_day : opts.n_candles;
  if (n_candles > cfg.candles_per_day) {
    fail(ErrorKind::Validation, "requested " + std::to_string(n_candles) +
                                    " candles, the day holds " +
                                    std::to_string(cfg.candles_per_day));
  }
  const int steps = n_candles * per_candle;
  const double dt = 1.0 / cfg.euler_steps_per_day;
  const double sdt = std::sqrt(dt);
  const double g = cfg.gamma;
  const double gc = std::sqrt(1.0 - g * g);

  VarianceState state = opts.initial;
  if (state.v1 == 0 && state.v2 == 0) state = VarianceState::stationary_mean(cfg);

  SimulatedDay day;
  if (opts.retain_latent) {
    day.nu.resize(steps + 1);
    day.varsigma.resize(steps + 1);
    day.beta.resize(steps + 1);
    day.x1.resize(steps + 1);
    day.x2.resize(steps + 1);
  }
  const std::int64_t day_start = cfg.day_start_epoch + opts.day_offset * 86400;
  const std::int64_t candle_seconds = cfg.candle_seconds();
  for (auto& c : day.candles) c.reserve(static_cast<std::size_t>(n_candles));

  Substream rng(cfg.seed, Domain::DgpDay, replication);
  double x1 = 0.0, x2 = 0.0;
  const double p0 = cfg.initial_price;
  const double scale = cfg.log_price_scale;
  double v1 = state.v1, v2 = state.v2;
  Candle c1{}, c2{};
  for (int s = 0; s <= steps; ++s) {
    const double t = s * dt;
    const double v1p = std::max(v1, 0.0);
    const double v2p = std::max(v2, 0.0);
    const double nu = v1p + v2p;
    const double beta = dgp_beta(cfg, t);
    const double varsigma = dgp_idio_ratio(t) * nu;
    if (opts.retain_latent) {
      day.nu(s) = nu;
      day.varsigma(s) = varsigma;
      day.beta(s) = beta;
      day.x1(s) = x1;
      day.x2(s) = x2;
    }

    const int phase = s % per_candle;
    if (s > 0) {
      c1.high = std::max(c1.high, x1);
      c1.low = std::min(c1.low, x1);
      c2.high = std::max(c2.high, x2);
      c2.low = std::min(c2.low, x2);
      if (phase == 0) {
        c1.close = x1;
        c2.close = x2;
        for (Candle* c : {&c1, &c2}) {
          c->open = p0 * std::exp(scale * c->open);
          c->high = p0 * std::exp(scale * c->high);
          c->low = p0 * std::exp(scale * c->low);
          c->close = p0 * std::exp(scale * c->close);
        }
        day.candles[0].push_back(c1);
        day.candles[1].push_back(c2);
      }
    }
    if (s < steps && phase == 0) {
      const std::int64_t ts = day_start + static_cast<std::int64_t>(s / per_candle) * candle_seconds;
      c1 = {ts, x1, x1, x1, x1};
      c2 = {ts, x2, x2, x2, x2};
    }
    if (s == steps) break;

    const double dw1 = sdt * rng.normal();
    const double dw2 = sdt * rng.normal();
    const double db1 = sdt * rng.normal();
    const double db2 = sdt * rng.normal();
    const double dx1 = std::sqrt(nu) * dw1;
    x1 += dx1;
    x2 += beta * dx1 + std::sqrt(varsigma) * dw2;
    v1 += cfg.kappa1 * (cfg.theta1 - v1p) * dt + cfg.xi1 * std::sqrt(v1p) * (g * dw1 + gc * db1);
    v2 += cfg.kappa2 * (cfg.theta2 - v2p) * dt + cfg.xi2 * std::sqrt(v2p) * (g * dw1 + gc * db2);
  }
  day.final_state = {v1, v2};
  return day;
}

VariancePaths simulate_variance_paths(const DgpConfig& cfg, int chains, int days,
                                      int steps_per_day) {
  cfg.validate();
  if (chains < 1 || days < 1 || steps_per_day < 1) {
    fail(ErrorKind::Validation, "chains, days and steps per day must be positive");
  }
  VariancePaths out{Eigen::MatrixXd(chains, days + 1), Eigen::MatrixXd(chains, days + 1)};
  const double dt = 1.0 / steps_per_day;
  const double sdt = std::sqrt(dt);
  const double g = cfg.gamma;
  const double gc = std::sqrt(1.0 - g * g);
  parallel_for(static_cast<std::size_t>(chains), [&](std::size_t c) {
    Substream rng(cfg.seed, Domain::DgpDay, (std::uint64_t{1} << 62) | c);
    double v1 = cfg.theta1, v2 = cfg.theta2;
    const auto row = static_cast<Eigen::Index>(c);
    out.v1(row, 0) = v1;
    out.v2(row, 0) = v2;
    for (int d = 1; d <= days; ++d) {
      for (int s = 0; s < steps_per_day; ++s) {
        const double v1p = std::max(v1, 0.0);
        const double v2p = std::max(v2, 0.0);
        const double dw1 = sdt * rng.normal();
        const double db1 = sdt * rng.normal();
        const double db2 = sdt * rng.normal();
        v1 += cfg.kappa1 * (cfg.theta1 - v1p) * dt + cfg.xi1 * std::sqrt(v1p) * (g * dw1 + gc * db1);
        v2 += cfg.kappa2 * (cfg.theta2 - v2p) * dt + cfg.xi2 * std::sqrt(v2p) * (g * dw1 + gc * db2);
      }
      out.v1(row, d) = std::max(v1, 0.0);
      out.v2(row, d) = std::max(v2, 0.0);
    }
  });
  return out;
}

std::vector<PowerRow> run_power_study(const DgpConfig& cfg, std::span<const StudyTest> tests,
                                      int reps) {
  cfg.validate();
  if (reps < 1) fail(ErrorKind::Validation, "power study needs at least one replication");
  if (tests.empty()) return {};
  int max_k = 0;
  for (const auto& t : tests) {
    check_critical_values(t.config, t.critical_values);
    max_k = std::max(max_k, t.config.k);
  }
  if (max_k > cfg.candles_per_day) fail(ErrorKind::Validation, "window longer than the day");

  const SamplingGrid grid =
      make_grid(cfg.day_start_epoch,
                cfg.day_start_epoch + kSessionSeconds,
                cfg.candles_per_day);
  const auto n = static_cast<std::size_t>(reps);
  const std::size_t chunks = chunk_count(n);
  struct Counts {
    std::vector<int> rejections, failures;
  };
  std::vector<Counts> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Counts& cnt = partial[c];
    cnt.rejections.assign(tests.size(), 0);
    cnt.failures.assign(tests.size(), 0);
    DayOptions opts;
    opts.n_candles = max_k;
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t rep = c * kChunk; rep < end; ++rep) {
      const SimulatedDay day = simulate_day(cfg, rep, opts);
      const TripleSeries<double> series = candles_to_triples(day.candles, grid);
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto& test = tests[i];
        const auto block = extract_window(series, WindowSpec{0.0, test.config.k});
        try {
          if (run_beta_test(block, test.config, test.critical_values).reject) ++cnt.rejections[i];
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DegenerateMarket && e.kind() != ErrorKind::DegenerateResidual) {
            throw;
          }
          ++cnt.failures[i];
        }
      }
    }
  });

  std::vector<PowerRow> rows;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    int rej = 0, fails = 0;
    for (const auto& p : partial) {
      rej += p.rejections[i];
      fails += p.failures[i];
    }
    PowerRow row;
    row.method = tests[i].config.method;
    row.k = tests[i].config.k;
    row.alpha = tests[i].config.alpha;
    row.beta_label = cfg.beta_path == BetaPath::Constant ? "constant" : "time-varying";
    row.beta = dgp_beta(cfg, 0.0);
    row.reps = reps;
    row.rejection_rate = static_cast<double>(rej) / reps;
    row.mc_se = std::sqrt(row.rejection_rate * (1 - row.rejection_rate) / reps);
    row.failures = fails;
    rows.push_back(row);
  }
  return rows;
}

std::vector<PowerRow> power_curve(const DgpConfig& cfg, std::span<const double> betas,
                                  std::span<const StudyTest> tests, int reps) {
  std::vector<PowerRow> rows;
  for (const double b : betas) {
    DgpConfig c = cfg;
    c.beta_path = BetaPath::Constant;
    c.beta_constant = b;
    auto part = run_power_study(c, tests, reps);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

}  // namespace candlekit
