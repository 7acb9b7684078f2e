// candlekit command-line front end.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "candlekit/artifacts.hpp"
#include "candlekit/brownian.hpp"
#include "candlekit/calibration.hpp"
#include "candlekit/dgp.hpp"
#include "candlekit/inference.hpp"
#include "candlekit/io.hpp"
#include "candlekit/parallel.hpp"
#include "candlekit/pipeline.hpp"

using namespace candlekit;

namespace {

struct Globals {
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::string output;
};

// Writes to --output, or stdout when unset or "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) fail(ErrorKind::Io, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) fail(ErrorKind::Io, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void emit_json(const Globals& g, const nlohmann::json& j) {
  if (g.output.empty() || g.output == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(g.output, j);
  }
}

struct WeightOptions {
  std::vector<std::string> files;
  std::vector<double> lambda;

  void add(CLI::App* cmd) {
    cmd->add_option("--weights", files, "Weights artifact (candlekit.weights.v1); repeat per k")
        ->check(CLI::ExistingFile);
    cmd->add_option("--lambda", lambda, "Manual weights l1,l2,l3")->expected(3)->delimiter(',');
  }

  // Artifact for k, then manual weights, then the published table.
  WeightVector for_k(int k) const {
    if (!lambda.empty()) return WeightVector::manual(lambda[0], lambda[1], lambda[2], k);
    for (const auto& f : files) {
      const CalibratedWeights cw = weights_from_json(read_json_file(f));
      if (cw.weights.k == k) return cw.weights;
    }
    if (!files.empty()) {
      fail(ErrorKind::ArtifactMismatch, "no weights artifact was given for k = " + std::to_string(k));
    }
    if (auto w = published_weights(k)) return *w;
    fail(ErrorKind::Validation, "no published weights for k = " + std::to_string(k) +
                                    "; pass --weights or --lambda");
  }
};

struct SessionOptions {
  std::string open = "09:30";
  std::string close = "16:00";
  int utc_offset = -300;
  std::int64_t candle_seconds = 60;

  void add(CLI::App* cmd) {
    cmd->add_option("--session-open", open, "Session open, local HH:MM")->capture_default_str();
    cmd->add_option("--session-close", close, "Session close, local HH:MM")->capture_default_str();
    cmd->add_option("--utc-offset", utc_offset, "Local time minus UTC, in minutes")
        ->capture_default_str();
    cmd->add_option("--candle-seconds", candle_seconds, "Candle length in seconds")
        ->capture_default_str();
  }

  SessionSpec spec() const {
    SessionSpec s;
    s.open_minute = parse_clock(open);
    s.close_minute = parse_clock(close);
    s.utc_offset_minutes = utc_offset;
    s.candle_seconds = candle_seconds;
    s.validate();
    return s;
  }
};

struct DataOptions {
  std::string market, asset, market_symbol, asset_symbol;
  int k = 10;
  int stride_minutes = 10;
  double alpha = 0.05;
  std::vector<std::string> methods{"candlestick", "return"};
  std::string critvals;
  WeightOptions weights;
  SessionOptions session;

  void add(CLI::App* cmd) {
    cmd->add_option("--market", market, "Market candle CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--asset", asset, "Asset candle CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--market-symbol", market_symbol, "Symbol to read from the market file");
    cmd->add_option("--asset-symbol", asset_symbol, "Symbol to read from the asset file");
    cmd->add_option("--k", k, "Window size in candles")->capture_default_str();
    cmd->add_option("--alpha", alpha, "Significance level")->capture_default_str();
    cmd->add_option("--methods", methods, "candlestick and/or return")->delimiter(',');
    cmd->add_option("--critvals", critvals, "Candlestick critical-values artifact")
        ->check(CLI::ExistingFile);
    weights.add(cmd);
    session.add(cmd);
  }

  PipelineConfig config() const {
    PipelineConfig cfg;
    cfg.k = k;
    cfg.stride_seconds = static_cast<std::int64_t>(stride_minutes) * 60;
    cfg.alpha = alpha;
    cfg.session = session.spec();
    cfg.methods.clear();
    for (const auto& m : methods) cfg.methods.push_back(parse_test_method(m));
    const bool candlestick =
        std::find(cfg.methods.begin(), cfg.methods.end(), TestMethod::Candlestick) !=
        cfg.methods.end();
    if (candlestick) {
      if (critvals.empty()) fail(ErrorKind::Validation, "the candlestick method needs --critvals");
      cfg.candlestick_critical_values = critvals_from_json(read_json_file(critvals));
      cfg.weights = weights.for_k(k);
    } else {
      cfg.weights = WeightVector::return_only(k);
    }
    return cfg;
  }

  std::vector<SessionDay> days(const SessionSpec& s) const {
    const auto m = select_series(read_candle_csv_file(market), market_symbol);
    const auto a = select_series(read_candle_csv_file(asset), asset_symbol);
    return build_session_days(m, a, s);
  }
};

std::vector<RollingResultRow> read_rows_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return read_rows_csv(in);
}


std::map<std::pair<int, double>, CriticalValues> load_critvals(const std::vector<std::string>& files) {
  std::map<std::pair<int, double>, CriticalValues> out;
  for (const auto& f : files) {
    const CriticalValues cv = critvals_from_json(read_json_file(f));
    if (cv.method == TestMethod::Candlestick) out[{cv.k, cv.alpha}] = cv;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spot covariance and beta estimation from candlestick data"};
  app.name("candlekit");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--output", g.output, "Output file (default: stdout)");

  std::function<void()> run;

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate estimator weights by simulation");
  CalibrationConfig cal_cfg;
  cal->add_option("--k", cal_cfg.k, "Window size")->required();
  cal->add_option("--rho-draws", cal_cfg.rho_draws, "Correlation draws")->capture_default_str();
  cal->add_option("--paths", cal_cfg.paths_per_rho, "Windows per correlation draw")
      ->capture_default_str();
  cal->add_option("--m", cal_cfg.m, "Sub-steps per interval")->capture_default_str();
  cal->callback([&] {
    run = [&] {
      if (cal_cfg.k == 1) {
        std::cerr << "warning: k = 1 is valid for estimation but the beta test needs k >= 2\n";
      }
      cal_cfg.seed = g.seed;
      const CalibratedWeights cw = calibrate(cal_cfg);
      emit_json(g, weights_to_json(cw));
    };
  });

  // critvals
  auto* crit = app.add_subcommand("critvals", "Critical values for the zero-beta test");
  TestConfig crit_cfg;
  std::string crit_method = "candlestick";
  WeightOptions crit_w;
  crit->add_option("--k", crit_cfg.k, "Window size")->required();
  crit->add_option("--alpha", crit_cfg.alpha, "Significance level")->capture_default_str();
  crit->add_option("--method", crit_method, "candlestick or return")->capture_default_str();
  crit->add_option("--reps", crit_cfg.mc_reps, "Monte Carlo replications")->capture_default_str();
  crit->add_option("--m", crit_cfg.m, "Sub-steps per interval")->capture_default_str();
  crit_w.add(crit);
  crit->callback([&] {
    run = [&] {
      crit_cfg.method = parse_test_method(crit_method);
      crit_cfg.seed = g.seed;
      if (crit_cfg.method == TestMethod::Candlestick) crit_cfg.weights = crit_w.for_k(crit_cfg.k);
      emit_json(g, critvals_to_json(critical_values(crit_cfg)));
    };
  });

  // estimate
  auto* est = app.add_subcommand("estimate", "Rolling spot beta estimates and tests");
  DataOptions est_opts;
  est_opts.add(est);
  est->add_option("--stride", est_opts.stride_minutes, "Minutes between anchors")
      ->capture_default_str();
  est->callback([&] {
    run = [&] {
      const PipelineConfig cfg = est_opts.config();
      const auto rows = rolling_estimate(est_opts.days(cfg.session), cfg);
      Sink out(g.output);
      write_rows_csv(out.stream(), rows);
      out.finish();
    };
  });

  // test
  auto* tst = app.add_subcommand("test", "Zero-beta test on the window at one anchor");
  DataOptions tst_opts;
  std::string anchor;
  tst_opts.add(tst);
  tst->add_option("--anchor", anchor, "Anchor timestamp (ISO-8601 or epoch seconds)")->required();
  tst->callback([&] {
    run = [&] {
      const PipelineConfig cfg = tst_opts.config();
      const auto rows = estimate_at(tst_opts.days(cfg.session), cfg, parse_timestamp(anchor));
      Sink out(g.output);
      write_rows_csv(out.stream(), rows);
      out.finish();
    };
  });

  // reject-summary
  auto* rs = app.add_subcommand("reject-summary", "Monthly rejection rates from estimate rows");
  std::string rs_rows;
  rs->add_option("--rows", rs_rows, "Rows CSV written by estimate")->required()->check(CLI::ExistingFile);
  rs->callback([&] {
    run = [&] {
      Sink out(g.output);
      write_reject_summary_csv(out.stream(), reject_summary(read_rows_file(rs_rows)));
      out.finish();
    };
  });

  // event-study
  auto* ev = app.add_subcommand("event-study", "Rows around an event, re-timed to the event");
  std::string ev_rows, ev_event;
  int ev_window = 60;
  SessionOptions ev_session;
  ev->add_option("--rows", ev_rows, "Rows CSV written by estimate")->required()->check(CLI::ExistingFile);
  ev->add_option("--event", ev_event, "Event timestamp (ISO-8601 or epoch seconds)")->required();
  ev->add_option("--window", ev_window, "Minutes on each side of the event")->capture_default_str();
  ev_session.add(ev);
  ev->callback([&] {
    run = [&] {
      const auto rows = event_window(read_rows_file(ev_rows), parse_timestamp(ev_event), ev_window,
                                     ev_session.spec());
      Sink out(g.output);
      write_event_csv(out.stream(), rows);
      out.finish();
    };
  });

  // cross-moments
  auto* cm = app.add_subcommand("cross-moments", "Correlations of r, a and w against rho");
  CrossMomentConfig cm_cfg;
  std::vector<double> cm_grid{-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8};
  cm->add_option("--rho", cm_grid, "Correlation grid")->delimiter(',');
  cm->add_option("--samples", cm_cfg.samples, "Simulated intervals per grid point")
      ->capture_default_str();
  cm->add_option("--m", cm_cfg.m, "Sub-steps per interval")->capture_default_str();
  cm->callback([&] {
    run = [&] {
      cm_cfg.seed = g.seed;
      Sink out(g.output);
      auto& os = out.stream();
      os << "rho,rho_r,rho_a,rho_w,se_r,se_a,se_w,samples\n";
      for (const auto& r : cross_moment_curve(cm_grid, cm_cfg)) {
        os << format_decimal(r.rho) << ',' << format_decimal(r.rho_r) << ','
           << format_decimal(r.rho_a) << ',' << format_decimal(r.rho_w) << ','
           << format_decimal(r.se_r) << ',' << format_decimal(r.se_a) << ','
           << format_decimal(r.se_w) << ',' << r.samples << '\n';
      }
      out.finish();
    };
  });

  // risk-table
  auto* rt = app.add_subcommand("risk-table", "Asymptotic risk of return, candlestick and oracle weights");
  RiskConfig rt_cfg;
  std::vector<int> rt_ks{5, 10, 20};
  std::vector<double> rt_rhos{0.0, 0.2, 0.6};
  WeightOptions rt_w;
  rt->add_option("--k", rt_ks, "Window sizes")->delimiter(',');
  rt->add_option("--rho", rt_rhos, "Correlations")->delimiter(',');
  rt->add_option("--reps", rt_cfg.reps, "Monte Carlo windows per cell")->capture_default_str();
  rt->add_option("--m", rt_cfg.m, "Sub-steps per interval")->capture_default_str();
  rt_w.add(rt);
  rt->callback([&] {
    run = [&] {
      rt_cfg.seed = g.seed;
      const auto rows = risk_table(rt_ks, rt_rhos, [&](int k) { return rt_w.for_k(k); }, rt_cfg);
      Sink out(g.output);
      auto& os = out.stream();
      os << "k,rho,return_risk,candlestick_risk,candlestick_se,oracle_risk,oracle_se,"
            "lambda1,lambda2,lambda3,oracle_lambda1,oracle_lambda2,oracle_lambda3,reps\n";
      for (const auto& r : rows) {
        os << r.k << ',' << format_decimal(r.rho) << ',' << format_decimal(r.return_risk.mean) << ','
           << format_decimal(r.candlestick_risk.mean) << ',' << format_decimal(r.candlestick_risk.se)
           << ',' << format_decimal(r.oracle_risk.mean) << ',' << format_decimal(r.oracle_risk.se);
        for (double l : r.candlestick_weights.as_array()) os << ',' << format_decimal(l);
        for (double l : r.oracle_weights.as_array()) os << ',' << format_decimal(l);
        os << ',' << r.candlestick_risk.reps << '\n';
      }
      out.finish();
    };
  });

  // power
  auto* pw = app.add_subcommand("power", "Rejection rates of both tests on simulated days");
  int pw_reps = 10000, pw_crit_reps = 10000, pw_m = kDefaultSubsteps;
  std::vector<int> pw_ks{5, 10, 20};
  std::vector<double> pw_alphas{0.01, 0.05, 0.10};
  std::vector<double> pw_betas;
  std::vector<std::string> pw_critvals;
  WeightOptions pw_w;
  pw->add_option("--k", pw_ks, "Window sizes")->delimiter(',');
  pw->add_option("--alpha", pw_alphas, "Significance levels")->delimiter(',');
  pw->add_option("--reps", pw_reps, "Simulated days")->capture_default_str();
  pw->add_option("--beta", pw_betas, "Constant betas (power curve); default: time-varying beta")
      ->delimiter(',');
  pw->add_option("--critval-reps", pw_crit_reps, "Replications for candlestick critical values")
      ->capture_default_str();
  pw->add_option("--m", pw_m, "Sub-steps per interval for critical values")->capture_default_str();
  pw->add_option("--critvals", pw_critvals, "Precomputed candlestick critical-values artifacts")
      ->check(CLI::ExistingFile);
  pw_w.add(pw);
  pw->callback([&] {
    run = [&] {
      const auto cached = load_critvals(pw_critvals);
      std::vector<StudyTest> tests;
      for (const TestMethod method : {TestMethod::Return, TestMethod::Candlestick}) {
        for (const int k : pw_ks) {
          for (const double alpha : pw_alphas) {
            StudyTest t;
            t.config.k = k;
            t.config.alpha = alpha;
            t.config.method = method;
            t.config.mc_reps = pw_crit_reps;
            t.config.m = pw_m;
            t.config.seed = g.seed;
            if (method == TestMethod::Candlestick) t.config.weights = pw_w.for_k(k);
            const auto it = cached.find({k, alpha});
            t.critical_values = (method == TestMethod::Candlestick && it != cached.end())
                                    ? it->second
                                    : critical_values(t.config);
            tests.push_back(t);
          }
        }
      }
      DgpConfig dgp;
      dgp.seed = g.seed;
      const auto rows = pw_betas.empty() ? run_power_study(dgp, tests, pw_reps)
                                         : power_curve(dgp, pw_betas, tests, pw_reps);
      Sink out(g.output);
      auto& os = out.stream();
      os << "method,k,alpha,beta_path,beta,rejection_rate,reps,mc_se,failures\n";
      for (const auto& r : rows) {
        os << to_string(r.method) << ',' << r.k << ',' << format_decimal(r.alpha) << ','
           << r.beta_label << ',' << format_decimal(r.beta) << ','
           << format_decimal(r.rejection_rate) << ',' << r.reps << ',' << format_decimal(r.mc_se)
           << ',' << r.failures << '\n';
      }
      out.finish();
    };
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate candle data from the stochastic-volatility model");
  int sim_days = 1;
  std::string sim_path = "time-varying";
  double sim_beta = 1.0;
  std::string sim_market = "MKT", sim_asset = "ASSET";
  sim->add_option("--days", sim_days, "Number of days")->capture_default_str();
  sim->add_option("--beta-path", sim_path, "time-varying or constant")->capture_default_str();
  sim->add_option("--beta", sim_beta, "Beta for the constant path")->capture_default_str();
  sim->add_option("--market-symbol", sim_market, "Symbol of the market series")->capture_default_str();
  sim->add_option("--asset-symbol", sim_asset, "Symbol of the asset series")->capture_default_str();
  sim->callback([&] {
    run = [&] {
      if (sim_days < 1) fail(ErrorKind::Validation, "--days must be positive");
      DgpConfig dgp;
      dgp.seed = g.seed;
      if (sim_path == "constant") {
        dgp.beta_path = BetaPath::Constant;
        dgp.beta_constant = sim_beta;
      } else if (sim_path != "time-varying") {
        fail(ErrorKind::Validation, "--beta-path must be time-varying or constant");
      }
      if (sim_market == sim_asset) fail(ErrorKind::Validation, "symbols must differ");
      CandleTable table;
      DayOptions opts;
      for (int d = 0; d < sim_days; ++d) {
        opts.day_offset = d;
        const SimulatedDay day = simulate_day(dgp, static_cast<std::uint64_t>(d), opts);
        auto& m = table[sim_market];
        auto& a = table[sim_asset];
        m.insert(m.end(), day.candles[0].begin(), day.candles[0].end());
        a.insert(a.end(), day.candles[1].begin(), day.candles[1].end());
        opts.initial = day.final_state;
      }
      Sink out(g.output);
      write_candle_table(out.stream(), table);
      out.finish();
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    set_thread_count(g.threads);
    run();
    return 0;
  } catch (const Error& e) {
    std::cerr << "candlekit: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return e.family() == ErrorFamily::Numerical ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "candlekit: error: " << e.what() << '\n';
    return 2;
  }
}
