#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockcorr/blockcorr.hpp"

namespace bc = blockcorr;
using bc::io::json;

namespace {

// Exit codes.
constexpr int kUsage = 2;
constexpr int kParse = 3;
constexpr int kDomain = 4;

struct Output {
  bool pretty = false;
  std::string path;

  void emit(const json& j) const {
    const std::string text = j.dump(pretty ? 2 : -1) + "\n";
    if (path.empty() || path == "-") {
      std::cout << text;
    } else {
      bc::io::write_file(path, text);
    }
  }
};

// Value errors found while loading a file are reported against the file.
template <class F>
auto load(const std::string& path, F&& reader) {
  try {
    return reader(path);
  } catch (const bc::InvalidArgument& e) {
    throw bc::ParseError(path, 0, 0, e.what());
  }
}

bc::BlockCorr read_block(const std::string& path) { return load(path, bc::io::read_block); }
bc::DataMatrix read_data(const std::string& path) { return load(path, bc::io::read_data); }

bool is_csv(const std::string& path) { return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json values_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json result_json(const bc::TestResult& r, bool with_trail) {
  // The noiseless path runs no bootstrap and has no p-values.
  const bool boot = r.bootstrap_reps > 0;
  auto p = [&](double v) { return boot ? json(v) : json(nullptr); };
  json out{{"statistic", r.statistic},
           {"p_value", p(r.p_value)},
           {"reject", r.reject},
           {"level", p(r.level)},
           {"bootstrap_reps", r.bootstrap_reps}};
  if (!with_trail) return out;
  out["selected_rank"] = r.selected_rank ? json(*r.selected_rank) : json(nullptr);
  json trail = json::array();
  for (const auto& t : r.trail) {
    trail.push_back({{"r", t.r},
                     {"statistic", t.statistic},
                     {"p_value", p(t.p_value)},
                     {"rejected", t.rejected},
                     {"dof", t.dof}});
  }
  out["trail"] = std::move(trail);
  if (r.pretest_p_value) {
    out["pretest"] = {{"statistic", optional_json(r.pretest_statistic)}, {"p_value", *r.pretest_p_value}};
  }
  return out;
}

json log_json(const bc::LogBlock& l, bc::EtaOrder order) {
  json g = json::array();
  for (Eigen::Index k = 0; k < l.spec.K(); ++k)
    for (Eigen::Index m = k + 1; m < l.spec.K(); ++m) g.push_back(l.g(k, m));
  json w = json::array();
  for (const auto& v : l.w) w.push_back(optional_json(v));
  const auto eta = bc::encode_eta(l, order);
  return json{{"sizes", l.spec.sizes()},
              {"d", values_json(l.d)},
              {"w", std::move(w)},
              {"g", std::move(g)},
              {"eta", values_json(eta.values)},
              {"order", bc::to_string(order)}};
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

const std::map<std::string, bc::EtaOrder> kOrders{{"wg", bc::EtaOrder::WithinThenCross},
                                                   {"paper", bc::EtaOrder::Paper}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block correlation matrices: CF admissibility, factor loadings and log parametrization"};
  app.name("blockcorr");
  app.require_subcommand(1);
  app.fallthrough();

  Output out;
  app.add_flag("--pretty", out.pretty, "Indent JSON output");
  app.add_option("-o,--output", out.path, "Write JSON to a file instead of stdout");

  std::function<void()> run;
  std::string input;
  auto add = [&](const std::string& name, const std::string& help, const std::string& input_help) {
    auto* sub = app.add_subcommand(name, help);
    if (!input_help.empty()) sub->add_option("input", input, input_help)->required()->check(CLI::ExistingFile);
    return sub;
  };

  auto* validate = add("validate", "Check a block JSON or dense CSV file", "Block JSON or dense CSV file");
  validate->callback([&] {
    run = [&] {
      if (is_csv(input)) {
        const auto d = load(input, bc::io::read_dense);
        out.emit({{"valid", true}, {"n", d.n()}});
        return;
      }
      const auto b = read_block(input);
      out.emit({{"valid", true},
                {"K", b.K()},
                {"n", b.spec().n()},
                {"sizes", b.spec().sizes()},
                {"singletons", b.spec().singletons()}});
    };
  });

  auto* expand = add("expand", "Expand a block JSON matrix to n x n", "Block JSON file");
  expand->callback([&] {
    run = [&] {
      const auto d = bc::expand(read_block(input));
      out.emit({{"n", d.n()}, {"matrix", matrix_json(d.matrix())}});
    };
  });

  std::vector<bc::Index> sizes;
  double compress_tol = 1e-9;
  auto* compress = add("compress", "Compress a dense CSV correlation matrix to block form", "Dense CSV file");
  compress->add_option("--sizes", sizes, "Group sizes, comma separated")->required()->delimiter(',');
  compress->add_option("--tol", compress_tol, "Largest allowed deviation from the block mean")
      ->check(CLI::NonNegativeNumber);
  compress->callback([&] {
    run = [&] {
      const auto d = load(input, bc::io::read_dense);
      out.emit(bc::io::to_json(bc::compress(d, bc::BlockSpec(sizes), compress_tol)));
    };
  });

  double psd_tol = bc::kDefaultPsdTol;
  double eps = bc::kDefaultCompletionEps;
  auto* check = add("check-cf", "Decide whether a CF representation exists", "Block JSON file");
  check->add_option("--tol", psd_tol, "PSD tolerance per group")->check(CLI::NonNegativeNumber);
  check->add_option("--eps", eps, "Singleton completion gap")->check(CLI::NonNegativeNumber);
  check->callback([&] {
    run = [&] {
      const auto rep = bc::check_admissible(read_block(input), psd_tol, eps);
      json completed = json::object();
      for (const auto& [k, v] : rep.completed_diagonals) completed[std::to_string(k)] = v;
      out.emit({{"admissible", rep.admissible},
                {"lambda_min_astar", rep.lambda_min_astar},
                {"rank", rep.rank},
                {"tol_used", rep.tol_used},
                {"boundary", rep.boundary},
                {"c_positive_definite", rep.c_positive_definite},
                {"lambda_min_c", rep.lambda_min_c},
                {"completed_diagonals", std::move(completed)},
                {"warnings", rep.warnings}});
    };
  });

  double rank_tol = bc::kDefaultRankTol;
  auto* minf = add("min-factors", "Minimal number of factors", "Block JSON file");
  minf->add_option("--rank-tol", rank_tol, "Relative eigenvalue threshold")->check(CLI::PositiveNumber);
  minf->callback([&] {
    run = [&] {
      const auto b = read_block(input);
      out.emit({{"K", b.K()}, {"rank", bc::minimal_rank(b, rank_tol)}});
    };
  });

  std::optional<bc::Index> rank;
  auto* load_cmd = add("loadings", "Lower-triangular factor loadings", "Block JSON file");
  load_cmd->add_option("-r,--rank", rank, "Number of factors (default: minimal)")->check(CLI::NonNegativeNumber);
  load_cmd->callback([&] {
    run = [&] {
      const auto b = read_block(input);
      const auto f = rank ? bc::loadings(b, *rank) : bc::loadings(b);
      out.emit({{"K", b.K()}, {"r", f.r}, {"B", matrix_json(f.B)}});
    };
  });

  bc::Index dof_k = 0;
  bc::Index dof_r = 0;
  auto* dof = add("dof", "Free parameters of a K x r lower-triangular loading matrix", "");
  dof->add_option("K", dof_k, "Number of groups")->required()->check(CLI::NonNegativeNumber);
  dof->add_option("r", dof_r, "Number of factors")->required()->check(CLI::NonNegativeNumber);
  dof->callback([&] {
    run = [&] { out.emit({{"K", dof_k}, {"r", dof_r}, {"dof", bc::dof(dof_k, dof_r)}}); };
  });

  bc::EtaOrder order = bc::EtaOrder::WithinThenCross;
  auto order_option = [&](CLI::App* sub) {
    return sub->add_option("--order", order, "eta ordering: wg (within, then cross) or paper")
        ->transform(CLI::CheckedTransformer(kOrders));
  };

  auto* log_cmd = add("log", "Matrix logarithm in block form", "Block JSON file");
  order_option(log_cmd);
  log_cmd->callback([&] { run = [&] { out.emit(log_json(bc::log_block(read_block(input)), order)); }; });

  auto* eta = add("eta", "eta vector of a block correlation matrix", "Block JSON file");
  order_option(eta);
  eta->callback([&] { run = [&] { out.emit(bc::io::to_json(bc::encode_eta(bc::log_block(read_block(input)), order))); }; });

  double inv_tol = bc::kDefaultInverseTol;
  bc::Index max_iter = bc::kDefaultInverseMaxIter;
  auto* inv = add("inv-eta", "Block correlation matrix of an eta vector", "eta JSON file");
  auto* inv_order = order_option(inv);
  inv->add_option("--tol", inv_tol, "Diagonal tolerance")->check(CLI::PositiveNumber);
  inv->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  inv->callback([&] {
    run = [&] {
      const json j = bc::io::detail::parse_json(bc::io::read_file(input), input);
      auto e = load(input, [&](const std::string& p) { return bc::io::eta_from_json(j, p); });
      if (inv_order->count() > 0) {
        if (j.contains("order") && e.order != order) {
          throw bc::ParseError(input, 0, 0,
                               std::string("'order' is ") + bc::to_string(e.order) + " but --order is " +
                                   bc::to_string(order));
        }
        e.order = order;
      }
      out.emit(bc::io::to_json(bc::inverse_map(e, inv_tol, max_iter)));
    };
  });

  double scale = 0.3;
  std::uint64_t seed = 0;
  auto* sample = add("sample", "Random nonsingular block correlation matrix", "");
  sample->add_option("--sizes", sizes, "Group sizes, comma separated")->required()->delimiter(',');
  sample->add_option("--scale", scale, "Standard deviation of eta entries")->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "Random seed");
  sample->callback([&] { run = [&] { out.emit(bc::io::to_json(bc::sample(bc::BlockSpec(sizes), scale, seed))); }; });

  auto* estimate = add("estimate", "Block correlation estimate from data", "Data CSV with a header of group labels");
  estimate->callback([&] {
    run = [&] {
      const auto g = bc::group_columns(read_data(input));
      const auto est = bc::estimate_block(g);
      json j = bc::io::to_json(est.corr);
      j["groups"] = g.groups;
      j["boundary_groups"] = est.boundary_groups;
      j["warnings"] = est.warnings;
      out.emit(j);
    };
  });

  bc::BootstrapOptions boot;
  auto boot_options = [&](CLI::App* sub) {
    sub->add_option("--reps", boot.reps, "Bootstrap replications (at least 99)")->check(CLI::Range(99, 1000000));
    sub->add_option("--level", boot.level, "Significance level")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--seed", boot.seed, "Random seed");
    sub->add_option("--threads", boot.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));
    sub->add_option("--eps", boot.eps, "Singleton completion gap")->check(CLI::NonNegativeNumber);
  };

  auto* test = add("test-cf", "Bootstrap test of CF admissibility", "Data CSV with a header of group labels");
  boot_options(test);
  test->callback([&] { run = [&] { out.emit(result_json(bc::test_cf(read_data(input), boot), false)); }; });

  bool pretest = false;
  bool population = false;
  auto* select = add("select-rank", "Sequential selection of the number of factors",
                     "Data CSV (or block JSON with --population)");
  boot_options(select);
  select->add_flag("--pretest", pretest, "Test CF admissibility first");
  select->add_flag("--population", population, "Treat the input as an exact block JSON matrix (no noise)");
  select->callback([&] {
    run = [&] {
      if (population) {
        out.emit(result_json(bc::select_rank_population(read_block(input), bc::kDefaultRankTol, boot.eps), true));
        return;
      }
      const auto mode = pretest ? bc::RankPretest::TestCf : bc::RankPretest::None;
      out.emit(result_json(bc::select_rank(read_data(input), boot, mode), true));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return kUsage;
  }

  try {
    run();
  } catch (const bc::Error& e) {
    print_error(bc::to_string(e.kind()), e.what());
    const bool parse = e.kind() == bc::ErrorKind::Parse || e.kind() == bc::ErrorKind::Dimension;
    return parse ? kParse : kDomain;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kDomain;
  }
  return 0;
}
