// crinfer: cluster-robust inference from CSV data.
//
// Subcommands: fit, test, diagnose, leveltest, ri, placebo, simulate,
// gendata.  Reports print as aligned text or canonical JSON (sorted keys,
// %.6g floats); identical settings and seed give byte-identical JSON under
// any --threads value.  Exit codes: 0 success, 2 validation error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cri/ci.hpp"
#include "cri/crve.hpp"
#include "cri/csv.hpp"
#include "cri/dgp.hpp"
#include "cri/diagnostics.hpp"
#include "cri/level_test.hpp"
#include "cri/methods.hpp"
#include "cri/monte_carlo.hpp"
#include "cri/pairs.hpp"
#include "cri/placebo.hpp"
#include "cri/randomization.hpp"
#include "cri/report.hpp"
#include "cri/transform.hpp"
#include "cri/wild.hpp"

namespace {

using cri::index_t;
using cri::json;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// data loading

struct DataArgs {
  std::string path;
  std::string outcome;
  std::string regressors;  // comma list
  bool intercept = true;
  std::string dummies;     // comma list of categorical columns
  std::string absorb;      // fixed-effect column absorbed by demeaning
  std::string clusters;    // comma list, at most two dimensions
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.path, "CSV input file (RFC 4180, header row required)")
      ->required();
  cmd->add_option("--y", args.outcome, "outcome column")->required();
  cmd->add_option("--x", args.regressors, "comma-separated regressor columns");
  cmd->add_flag("--intercept,!--no-intercept", args.intercept,
                "include a constant column (default on)");
  cmd->add_option("--dummy", args.dummies,
                  "categorical columns expanded to level dummies (first level dropped)");
  cmd->add_option("--absorb", args.absorb, "fixed-effect column absorbed by demeaning");
  cmd->add_option("--cluster", args.clusters,
                  "cluster column, or two comma-separated columns for two-way clustering");
}

struct Loaded {
  cri::CsvTable table;
  std::shared_ptr<const cri::Dataset> data;
  std::vector<std::string> cluster_cols;
  std::map<std::string, cri::ClusterPartition> partitions;  // keyed by column
  std::string absorb_column;
  index_t absorbed_groups = 0;
  std::vector<std::string> dropped;
};

Loaded load_data(const DataArgs& args) {
  Loaded loaded;
  loaded.table = cri::read_csv(args.path);
  const auto& table = loaded.table;
  const index_t n = table.n_rows();
  if (n == 0) throw cri::validation_error("dataset '" + args.path + "' has no data rows");

  cri::Dataset data;
  {
    const auto y = table.numeric_column(args.outcome);
    data.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  }

  std::vector<std::pair<std::string, Eigen::VectorXd>> columns;
  if (args.intercept) columns.emplace_back("const", Eigen::VectorXd::Ones(n));
  for (const auto& name : split_list(args.regressors)) {
    const auto x = table.numeric_column(name);
    columns.emplace_back(name, Eigen::Map<const Eigen::VectorXd>(x.data(), n));
  }
  for (const auto& name : split_list(args.dummies)) {
    const auto levels = cri::build_partition(table.string_column(name));
    if (levels.g_count() < 2)
      throw cri::validation_error("dummy column '" + name + "' has fewer than two levels");
    for (index_t level = 1; level < levels.g_count(); ++level) {
      Eigen::VectorXd indicator = Eigen::VectorXd::Zero(n);
      for (const index_t i : levels.members[static_cast<std::size_t>(level)]) indicator(i) = 1.0;
      columns.emplace_back(name + "=" + levels.labels[static_cast<std::size_t>(level)],
                           std::move(indicator));
    }
  }
  if (columns.empty())
    throw cri::validation_error("no regressors: give --x, --dummy, or --intercept");

  data.X.resize(n, static_cast<index_t>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    data.names.push_back(columns[j].first);
    data.X.col(static_cast<index_t>(j)) = columns[j].second;
  }

  loaded.cluster_cols = split_list(args.clusters);
  if (loaded.cluster_cols.size() > 2)
    throw cri::validation_error("at most two clustering dimensions are supported");
  for (const auto& col : loaded.cluster_cols)
    loaded.partitions.emplace(col, cri::build_partition(table.string_column(col)));

  if (!args.absorb.empty()) {
    loaded.absorb_column = args.absorb;
    const auto fe = cri::build_partition(table.string_column(args.absorb));
    auto transformed = cri::within_transform(data, fe);
    loaded.absorbed_groups = transformed.absorbed_count;
    loaded.dropped = transformed.dropped;
    data = std::move(transformed.data);
  } else {
    data.validate();
  }
  loaded.data = std::make_shared<const cri::Dataset>(std::move(data));
  return loaded;
}

// period labels -> 0-based codes ordered by label sort
std::vector<index_t> period_codes(const cri::CsvTable& table, const std::string& column,
                                  index_t& periods_out) {
  const auto part = cri::build_partition(table.string_column(column));
  std::vector<std::pair<std::string, index_t>> order;
  for (index_t p = 0; p < part.g_count(); ++p)
    order.emplace_back(part.labels[static_cast<std::size_t>(p)], p);
  std::sort(order.begin(), order.end());
  std::vector<index_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    rank[static_cast<std::size_t>(order[r].second)] = static_cast<index_t>(r);
  std::vector<index_t> codes(static_cast<std::size_t>(part.n_obs()));
  for (index_t i = 0; i < part.n_obs(); ++i)
    codes[static_cast<std::size_t>(i)] =
        rank[static_cast<std::size_t>(part.assignment[static_cast<std::size_t>(i)])];
  periods_out = part.g_count();
  return codes;
}

// ---------------------------------------------------------------------------
// output plumbing

struct OutputArgs {
  std::string format = "text";
  std::string out_path;
};

void add_output_options(CLI::App* cmd, OutputArgs& args) {
  cmd->add_option("--format", args.format, "output format: text or json")
      ->check(CLI::IsMember({"text", "json"}));
  cmd->add_option("--out", args.out_path, "write the report to a file instead of stdout");
}

void emit(const OutputArgs& args, const std::string& text, const json& report) {
  const std::string payload = args.format == "json" ? cri::dump_canonical_json(report) : text;
  if (args.out_path.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw cri::validation_error("cannot write to '" + args.out_path + "'");
    out << payload;
  }
}

std::string fmt(double value, int width = 0) {
  const std::string s = cri::format_number(value);
  if (static_cast<int>(s.size()) >= width) return " " + s;
  return std::string(static_cast<std::size_t>(width - static_cast<int>(s.size())) + 1, ' ') + s;
}

json size_summary_json(const cri::SizeSummary& s) {
  json out;
  out["g"] = s.g_count;
  out["min"] = s.min;
  out["q1"] = s.q1;
  out["median"] = s.median;
  out["q3"] = s.q3;
  out["max"] = s.max;
  out["mean"] = s.mean;
  return out;
}

// G, N, and the cluster-size distribution; attached to every report that
// uses a clustered method.
json sample_block(const Loaded& loaded) {
  json out;
  out["n"] = loaded.data->n_obs();
  json clusters = json::object();
  for (const auto& col : loaded.cluster_cols)
    clusters[col] = size_summary_json(cri::size_summary(loaded.partitions.at(col)));
  out["clusters"] = clusters;
  if (!loaded.absorb_column.empty()) {
    json absorbed;
    absorbed["column"] = loaded.absorb_column;
    absorbed["groups"] = loaded.absorbed_groups;
    absorbed["dropped"] = loaded.dropped;
    out["absorbed"] = absorbed;
  }
  return out;
}

void print_sample_block(std::ostream& os, const Loaded& loaded) {
  os << "N = " << loaded.data->n_obs();
  if (!loaded.absorb_column.empty())
    os << "   (absorbed " << loaded.absorbed_groups << " '" << loaded.absorb_column
       << "' fixed effects)";
  os << '\n';
  for (const auto& col : loaded.cluster_cols) {
    const auto s = cri::size_summary(loaded.partitions.at(col));
    os << "clusters " << col << ": G = " << s.g_count
       << "  sizes min/q1/med/q3/max =" << fmt(s.min) << " /" << fmt(s.q1) << " /"
       << fmt(s.median) << " /" << fmt(s.q3) << " /" << fmt(s.max) << "  mean =" << fmt(s.mean)
       << '\n';
  }
  for (const auto& name : loaded.dropped)
    os << "note: column '" << name << "' absorbed by fixed effects and dropped\n";
}

// ---------------------------------------------------------------------------
// bootstrap settings shared by test/placebo/simulate

struct BootArgs {
  index_t reps = 9999;
  std::uint64_t seed = 1;
  std::string aux = "auto";
  std::string studentize = "cv1";
};

void add_boot_options(CLI::App* cmd, BootArgs& args) {
  cmd->add_option("--boot-reps", args.reps, "bootstrap replications B (default 9999)");
  cmd->add_option("--seed", args.seed, "RNG seed");
  cmd->add_option("--aux", args.aux, "auxiliary distribution: rademacher, webb, or auto")
      ->check(CLI::IsMember({"rademacher", "webb", "auto"}));
  cmd->add_option("--studentize", args.studentize, "bootstrap studentization: cv1 or cv3")
      ->check(CLI::IsMember({"cv1", "cv3"}));
}

cri::WildOptions wild_options(const BootArgs& args, index_t g_count, unsigned threads) {
  cri::WildOptions wild;
  wild.b = args.reps;
  wild.seed = args.seed;
  wild.threads = threads;
  wild.studentization =
      args.studentize == "cv3" ? cri::Studentization::CV3 : cri::Studentization::CV1;
  if (args.aux == "rademacher") {
    wild.aux = cri::AuxKind::Rademacher;
  } else if (args.aux == "webb") {
    wild.aux = cri::AuxKind::Webb6;
  } else {
    const auto [kind, notice] = cri::choose_aux(g_count);
    wild.aux = kind;
    if (notice) std::cerr << "note: " << *notice << '\n';
  }
  return wild;
}

unsigned resolve_threads(unsigned flag_value) {
  return flag_value > 0 ? flag_value : cri::default_threads();
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  DataArgs data;
  OutputArgs output;
  std::string methods = "cv1,cv3";
};

int cmd_fit(const FitArgs& args) {
  const auto loaded = load_data(args.data);
  if (loaded.cluster_cols.size() != 1)
    throw cri::validation_error("fit needs exactly one --cluster column");
  const auto& part = loaded.partitions.at(loaded.cluster_cols.front());
  if (part.g_count() < 2)
    throw cri::validation_error("clustered methods need at least two clusters, got " +
                                std::to_string(part.g_count()));
  const auto fit = cri::fit_ols(loaded.data, std::make_shared<const cri::ClusterPartition>(part));

  std::vector<std::pair<std::string, cri::CovEstimate>> covs;
  for (const auto& name : split_list(args.methods)) {
    const auto kind = cri::method_from_string(name);
    switch (kind) {
      case cri::MethodKind::HC1Normal: covs.emplace_back("HC1", cri::hc1(fit)); break;
      case cri::MethodKind::CV1T: covs.emplace_back("CV1", cri::cv1(fit)); break;
      case cri::MethodKind::CV2T: covs.emplace_back("CV2", cri::cv2(fit)); break;
      case cri::MethodKind::CV3T: covs.emplace_back("CV3", cri::cv3(fit)); break;
      default:
        throw cri::validation_error("fit reports covariance methods only (hc1, cv1, cv2, cv3)");
    }
  }

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << '\n' << std::left;
  text << "coefficient         estimate";
  for (const auto& [name, cov] : covs) text << "     se(" << name << ")";
  text << '\n';
  for (index_t j = 0; j < fit.n_regressors(); ++j) {
    text << ' ';
    text.width(17);
    text << loaded.data->names[static_cast<std::size_t>(j)];
    text << fmt(fit.beta(j), 10);
    for (const auto& [name, cov] : covs) text << fmt(cov.se(j), 11);
    text << '\n';
  }

  json report;
  report["command"] = "fit";
  report["sample"] = sample_block(loaded);
  report["level"] = loaded.cluster_cols.front();
  json coef = json::array();
  for (index_t j = 0; j < fit.n_regressors(); ++j) {
    json row;
    row["name"] = loaded.data->names[static_cast<std::size_t>(j)];
    row["estimate"] = fit.beta(j);
    json ses;
    for (const auto& [name, cov] : covs) ses[name] = cov.se(j);
    row["std_errors"] = ses;
    coef.push_back(row);
  }
  report["coefficients"] = coef;
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// test

struct TestArgs {
  DataArgs data;
  OutputArgs output;
  BootArgs boot;
  std::string coef;
  double null_value = 0.0;
  std::string methods = "cv1,cv3,wcr";
  std::string wald_zero;  // comma list of coefficients jointly restricted to zero
  std::string ci = "none";
  double alpha = 0.05;
  std::string dump_replicates;
  unsigned threads = 0;
};

json boot_json(const cri::BootstrapResult& boot) {
  json out;
  out["statistic"] = boot.tau;
  out["p_symmetric"] = boot.p_symmetric;
  out["p_equal_tail"] = boot.p_equal_tail;
  out["b"] = boot.b;
  out["enumerated"] = boot.enumerated;
  out["aux"] = cri::to_string(boot.aux);
  out["studentize"] = cri::to_string(boot.studentization);
  out["variant"] = cri::to_string(boot.variant);
  out["seed"] = boot.seed;
  if (boot.discarded > 0) out["discarded"] = boot.discarded;
  return out;
}

int cmd_test(const TestArgs& args) {
  const auto loaded = load_data(args.data);
  if (loaded.cluster_cols.empty())
    throw cri::validation_error("test needs --cluster (one column, or two for two-way)");
  const bool twoway = loaded.cluster_cols.size() == 2;
  const auto& part_a = loaded.partitions.at(loaded.cluster_cols.front());
  for (const auto& col : loaded.cluster_cols)
    if (loaded.partitions.at(col).g_count() < 2)
      throw cri::validation_error("clustered methods need at least two clusters in '" + col + "'");
  if (args.coef.empty()) throw cri::validation_error("test needs --coef");

  const unsigned threads = resolve_threads(args.threads);
  const auto fit =
      cri::fit_ols(loaded.data, std::make_shared<const cri::ClusterPartition>(part_a));
  const index_t j = loaded.data->column(args.coef);
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(fit.n_regressors());
  direction(j) = 1.0;

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << "\ntest: " << args.coef << " = " << cri::format_number(args.null_value) << "\n";
  text << "estimate = " << cri::format_number(fit.beta(j)) << "\n\n";
  text << " method                level              se          t     dof/B    p-value\n";

  json report;
  report["command"] = "test";
  report["sample"] = sample_block(loaded);
  json hypothesis;
  hypothesis["coefficient"] = args.coef;
  hypothesis["null"] = args.null_value;
  report["hypothesis"] = hypothesis;
  report["estimate"] = fit.beta(j);
  json results = json::array();

  const std::string level = loaded.cluster_cols.front();
  const auto add_cov_row = [&](const std::string& method, const std::string& lvl,
                               const cri::CovEstimate& cov) {
    const auto t = cri::t_test(fit, cov, direction, args.null_value);
    text << ' ' << std::left;
    text.width(21);
    text << method;
    text.width(14);
    text << lvl;
    text << fmt(t.std_error, 11) << fmt(t.statistic, 10) << fmt(t.dof2, 9)
         << fmt(t.p_value, 10) << '\n';
    json row;
    row["method"] = method;
    row["level"] = lvl;
    row["std_error"] = t.std_error;
    row["statistic"] = t.statistic;
    row["dof"] = t.dof2;
    row["p_value"] = t.p_value;
    row["reference"] = cov.ref == cri::RefDist::Normal ? "N(0,1)" : "t";
    if (cov.kind == cri::CovKind::TwoWayCV1) row["psd"] = cov.psd;
    results.push_back(row);
  };
  const auto add_boot_row = [&](const std::string& method, const std::string& lvl,
                                const cri::BootstrapResult& boot) {
    for (const auto& warning : boot.warnings) std::cerr << "note: " << warning << '\n';
    text << ' ' << std::left;
    text.width(21);
    text << method;
    text.width(14);
    text << lvl;
    text << std::string(12, ' ') << fmt(boot.tau, 10)
         << fmt(static_cast<double>(boot.b), 9) << fmt(boot.p_symmetric, 10)
         << (boot.enumerated ? "  (enumerated)" : "") << '\n';
    json row;
    row["method"] = method;
    row["level"] = lvl;
    row["bootstrap"] = boot_json(boot);
    results.push_back(row);
  };

  std::optional<cri::BootstrapResult> wcu_result;
  cri::WildOptions wild = wild_options(args.boot, part_a.g_count(), threads);

  for (const auto& name : split_list(args.methods)) {
    if (name == "twoway") {
      if (!twoway) throw cri::validation_error("method 'twoway' needs two --cluster columns");
      const auto& part_b = loaded.partitions.at(loaded.cluster_cols[1]);
      const auto crossed = cri::build_crossed(part_a, part_b);
      const auto fit_b =
          cri::fit_ols(loaded.data, std::make_shared<const cri::ClusterPartition>(part_b));
      const auto fit_ab = cri::fit_ols(
          loaded.data, std::make_shared<const cri::ClusterPartition>(crossed.intersection));
      const auto cov = cri::twoway_cv1(fit, fit_b, fit_ab);
      if (!cov.psd) std::cerr << "note: two-way variance matrix is not positive semidefinite\n";
      add_cov_row("two-way CV1", loaded.cluster_cols.front() + "&" + loaded.cluster_cols[1], cov);
      continue;
    }
    if (name == "pairs") {
      cri::PairsOptions popts;
      popts.b = args.boot.reps;
      popts.seed = args.boot.seed;
      popts.threads = threads;
      add_boot_row("pairs", level,
                   cri::pairs_cluster_test(fit, direction, args.null_value, popts));
      continue;
    }
    const auto kind = cri::method_from_string(name);
    switch (kind) {
      case cri::MethodKind::HC1Normal: add_cov_row("HC1 N(0,1)", "none", cri::hc1(fit)); break;
      case cri::MethodKind::CV1T: add_cov_row("CV1 t(G-1)", level, cri::cv1(fit)); break;
      case cri::MethodKind::CV2T: add_cov_row("CV2 t(G-1)", level, cri::cv2(fit)); break;
      case cri::MethodKind::CV3T: add_cov_row("CV3 t(G-1)", level, cri::cv3(fit)); break;
      case cri::MethodKind::WCR: {
        const auto restricted = cri::add_restriction(
            fit, cri::Restriction::coefficient(j, fit.n_regressors(), args.null_value));
        add_boot_row("WCR", level, cri::wcr_test(restricted, wild));
        break;
      }
      case cri::MethodKind::WCU: {
        wcu_result = cri::wcu_test(fit, direction, args.null_value, wild);
        add_boot_row("WCU", level, *wcu_result);
        break;
      }
    }
  }

  // joint Wald test, if requested
  if (!args.wald_zero.empty()) {
    const auto names = split_list(args.wald_zero);
    cri::Restriction rest;
    rest.R = Eigen::MatrixXd::Zero(static_cast<index_t>(names.size()), fit.n_regressors());
    rest.r = Eigen::VectorXd::Zero(static_cast<index_t>(names.size()));
    for (std::size_t row = 0; row < names.size(); ++row)
      rest.R(static_cast<index_t>(row), loaded.data->column(names[row])) = 1.0;
    const auto w = cri::wald_test(fit, cri::cv1(fit), rest);
    text << "\nWald (" << args.wald_zero << " = 0): W = " << cri::format_number(w.statistic)
         << ", F(" << cri::format_number(w.dof1) << ", " << cri::format_number(w.dof2)
         << ") p = " << cri::format_number(w.p_value) << '\n';
    json wald;
    wald["restrictions"] = names;
    wald["statistic"] = w.statistic;
    wald["dof1"] = w.dof1;
    wald["dof2"] = w.dof2;
    wald["p_value"] = w.p_value;
    report["wald"] = wald;
  }

  // confidence intervals
  if (args.ci != "none") {
    json cis = json::object();
    const auto cov = cri::cv1(fit);
    const auto add_ci = [&](const cri::ConfidenceInterval& ci) {
      text << "CI " << std::left;
      text.width(13);
      text << cri::to_string(ci.method);
      text << " [" << cri::format_number(ci.lower) << ", " << cri::format_number(ci.upper)
           << "]  level " << cri::format_number(ci.level) << '\n';
      json row;
      row["lower"] = ci.lower;
      row["upper"] = ci.upper;
      row["level"] = ci.level;
      if (ci.method == cri::CiMethod::Inversion) row["iterations"] = ci.iterations;
      cis[cri::to_string(ci.method)] = row;
    };
    text << '\n';
    if (args.ci == "se" || args.ci == "percentile-t" || args.ci == "all") {
      if (!wcu_result) wcu_result = cri::wcu_test(fit, direction, args.null_value, wild);
      if (args.ci == "se" || args.ci == "all")
        add_ci(cri::ci_bootstrap_se(*wcu_result, cov.dof, args.alpha));
      if (args.ci == "percentile-t" || args.ci == "all")
        add_ci(cri::ci_percentile_t(*wcu_result, cov.se(j), args.alpha));
    }
    if (args.ci == "inversion" || args.ci == "all") {
      cri::InversionOptions iopts;
      iopts.alpha = args.alpha;
      iopts.wild = wild;
      add_ci(cri::ci_inversion(fit, j, iopts));
    }
    report["ci"] = cis;
  }

  if (!args.dump_replicates.empty()) {
    if (!wcu_result) wcu_result = cri::wcu_test(fit, direction, args.null_value, wild);
    std::ofstream out(args.dump_replicates, std::ios::binary);
    if (!out) throw cri::validation_error("cannot write to '" + args.dump_replicates + "'");
    out << "replicate,tau,coef\n";
    for (std::size_t b = 0; b < wcu_result->replicates.size(); ++b)
      out << b << ',' << cri::format_number(wcu_result->replicates[b]) << ','
          << cri::format_number(wcu_result->coef_replicates[b]) << '\n';
  }

  report["results"] = results;
  json settings;
  settings["seed"] = args.boot.seed;
  settings["boot_reps"] = args.boot.reps;
  settings["alpha"] = args.alpha;
  report["settings"] = settings;
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
  DataArgs data;
  OutputArgs output;
  std::string coef;
  std::string csv_out;
  std::string edf_out;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  const auto loaded = load_data(args.data);
  if (loaded.cluster_cols.size() != 1)
    throw cri::validation_error("diagnose needs exactly one --cluster column");
  const auto& part = loaded.partitions.at(loaded.cluster_cols.front());
  if (part.g_count() < 2) throw cri::validation_error("diagnose needs at least two clusters");
  if (args.coef.empty()) throw cri::validation_error("diagnose needs --coef");

  const auto fit = cri::fit_ols(loaded.data, std::make_shared<const cri::ClusterPartition>(part));
  const index_t j = loaded.data->column(args.coef);
  const auto report_data = cri::diagnose(fit, j);

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << "\ncoefficient " << args.coef << ": estimate = " << cri::format_number(fit.beta(j))
       << '\n';
  text << "effective clusters G*(0) = " << cri::format_number(report_data.effective.g_star0)
       << "  (V_s = " << cri::format_number(report_data.effective.v_s) << ")\n\n";
  text << " cluster              N_g        L_g       L_gj     beta_j(-g)\n";
  for (index_t g = 0; g < part.g_count(); ++g) {
    text << ' ' << std::left;
    text.width(16);
    text << part.labels[static_cast<std::size_t>(g)];
    text << fmt(static_cast<double>(report_data.sizes[static_cast<std::size_t>(g)]), 6)
         << fmt(report_data.leverages(g), 10) << fmt(report_data.partial_leverages(g), 10)
         << fmt(report_data.deleted_estimates(g, j), 14) << '\n';
  }

  json report;
  report["command"] = "diagnose";
  report["sample"] = sample_block(loaded);
  report["coefficient"] = args.coef;
  report["estimate"] = fit.beta(j);
  json eff;
  eff["v_s"] = report_data.effective.v_s;
  eff["g_star0"] = report_data.effective.g_star0;
  report["effective_clusters"] = eff;
  json rows = json::array();
  for (index_t g = 0; g < part.g_count(); ++g) {
    json row;
    row["cluster"] = part.labels[static_cast<std::size_t>(g)];
    row["n_g"] = report_data.sizes[static_cast<std::size_t>(g)];
    row["leverage"] = report_data.leverages(g);
    row["partial_leverage"] = report_data.partial_leverages(g);
    row["deleted_estimate"] = report_data.deleted_estimates(g, j);
    rows.push_back(row);
  }
  report["clusters"] = rows;

  if (!args.csv_out.empty()) {
    std::ofstream out(args.csv_out, std::ios::binary);
    if (!out) throw cri::validation_error("cannot write to '" + args.csv_out + "'");
    out << "cluster,n_g,leverage,partial_leverage,deleted_estimate\n";
    for (index_t g = 0; g < part.g_count(); ++g)
      out << cri::csv_quote(part.labels[static_cast<std::size_t>(g)]) << ','
          << report_data.sizes[static_cast<std::size_t>(g)] << ','
          << cri::format_number(report_data.leverages(g)) << ','
          << cri::format_number(report_data.partial_leverages(g)) << ','
          << cri::format_number(report_data.deleted_estimates(g, j)) << '\n';
  }
  if (!args.edf_out.empty()) {
    Eigen::VectorXd sizes(part.g_count());
    for (index_t g = 0; g < part.g_count(); ++g)
      sizes(g) = static_cast<double>(report_data.sizes[static_cast<std::size_t>(g)]);
    const auto s_edf = cri::edf_points(sizes);
    const auto l_edf = cri::edf_points(report_data.leverages);
    const auto p_edf = cri::edf_points(report_data.partial_leverages);
    std::ofstream out(args.edf_out, std::ios::binary);
    if (!out) throw cri::validation_error("cannot write to '" + args.edf_out + "'");
    out << "rank,sizes,leverage,partial_leverage\n";
    for (std::size_t g = 0; g < s_edf.size(); ++g)
      out << (g + 1) << ',' << cri::format_number(s_edf[g]) << ',' << cri::format_number(l_edf[g])
          << ',' << cri::format_number(p_edf[g]) << '\n';
  }

  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// leveltest

struct LevelArgs {
  DataArgs data;
  OutputArgs output;
  std::string levels;  // ordered fine -> coarse; 'none' = observation level
  std::string coef;
  index_t reps = 999;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

int cmd_leveltest(const LevelArgs& args) {
  const auto loaded = load_data(args.data);
  if (args.coef.empty()) throw cri::validation_error("leveltest needs --coef");
  const auto level_names = split_list(args.levels);
  if (level_names.size() < 2)
    throw cri::validation_error("leveltest needs --levels with at least two entries (fine to "
                                "coarse; 'none' means no clustering)");

  std::vector<std::pair<std::string, cri::ClusterPartition>> levels;
  for (const auto& name : level_names) {
    if (name == "none")
      levels.emplace_back(name, cri::singleton_partition(loaded.data->n_obs()));
    else
      levels.emplace_back(name, cri::build_partition(loaded.table.string_column(name)));
  }
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    if (!cri::is_nested(levels[i].second, levels[i + 1].second))
      throw cri::validation_error("level '" + levels[i].first + "' is not nested in '" +
                                  levels[i + 1].first + "'");

  // any partition works for the fit; scores are rebuilt per level pair
  const auto fit = cri::fit_ols(
      loaded.data, std::make_shared<const cri::ClusterPartition>(levels.back().second));
  const index_t j = loaded.data->column(args.coef);
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(fit.n_regressors());
  direction(j) = 1.0;

  cri::LevelTestOptions opts;
  opts.b = args.reps;
  opts.seed = args.seed;
  opts.threads = resolve_threads(args.threads);

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << "\nscore-variance tests for '" << args.coef << "' (one-sided, upper)\n\n";
  text << " fine            coarse              tau  p-asymptotic  p-bootstrap\n";

  json report;
  report["command"] = "leveltest";
  report["sample"] = sample_block(loaded);
  report["coefficient"] = args.coef;
  json rows = json::array();

  for (std::size_t fine = 0; fine < levels.size(); ++fine)
    for (std::size_t coarse = fine + 1; coarse < levels.size(); ++coarse) {
      const auto result = cri::score_variance_test(fit, levels[fine].second,
                                                   levels[coarse].second, direction, opts);
      text << ' ' << std::left;
      text.width(16);
      text << levels[fine].first;
      text.width(14);
      text << levels[coarse].first;
      text << fmt(result.tau_stat, 9) << fmt(result.p_asymptotic, 13)
           << fmt(result.p_bootstrap, 12) << (result.degenerate ? "  (degenerate)" : "") << '\n';
      json row;
      row["fine"] = levels[fine].first;
      row["coarse"] = levels[coarse].first;
      row["theta"] = result.theta_hat;
      row["tau"] = result.tau_stat;
      row["p_asymptotic"] = result.p_asymptotic;
      row["p_bootstrap"] = result.p_bootstrap;
      row["degenerate"] = result.degenerate;
      row["b"] = result.b;
      row["enumerated"] = result.enumerated;
      rows.push_back(row);
    }
  report["tests"] = rows;
  json settings;
  settings["seed"] = args.seed;
  settings["boot_reps"] = args.reps;
  report["settings"] = settings;
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// ri

struct RiArgs {
  DataArgs data;
  OutputArgs output;
  std::string treatment;
  std::string period;
  std::string statistic = "t";
  bool upper_tail = false;
  bool redraw_starts = false;
  index_t reps = 9999;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string dump_replicates;
};

int cmd_ri(const RiArgs& args) {
  // the treatment column stays out of --x; it is rebuilt per re-randomization
  const auto loaded = load_data(args.data);
  if (loaded.cluster_cols.size() != 1)
    throw cri::validation_error("ri needs exactly one --cluster column");
  const auto& part = loaded.partitions.at(loaded.cluster_cols.front());

  const auto treat_col = loaded.table.numeric_column(args.treatment);
  cri::TreatmentSpec treatment;
  treatment.redraw_starts = args.redraw_starts;
  if (!args.period.empty())
    treatment.period_of_obs = period_codes(loaded.table, args.period, treatment.periods);

  // infer treated clusters (and start periods for DiD) from the column
  for (index_t g = 0; g < part.g_count(); ++g) {
    index_t start = treatment.periods;  // "never"
    bool any = false, all = true;
    for (const index_t i : part.members[static_cast<std::size_t>(g)]) {
      const bool on = treat_col[static_cast<std::size_t>(i)] != 0.0;
      any |= on;
      all &= on;
      if (on && !treatment.period_of_obs.empty())
        start = std::min(start, treatment.period_of_obs[static_cast<std::size_t>(i)]);
    }
    if (!any) continue;
    treatment.treated_clusters.push_back(g);
    if (treatment.period_of_obs.empty()) {
      if (!all)
        throw cri::validation_error(
            "treatment varies inside cluster '" + part.labels[static_cast<std::size_t>(g)] +
            "'; give --period for DiD-style treatment");
    } else {
      treatment.start_periods.push_back(start);
      for (const index_t i : part.members[static_cast<std::size_t>(g)]) {
        const bool on = treat_col[static_cast<std::size_t>(i)] != 0.0;
        const bool expect = treatment.period_of_obs[static_cast<std::size_t>(i)] >= start;
        if (on != expect)
          throw cri::validation_error("treatment in cluster '" +
                                      part.labels[static_cast<std::size_t>(g)] +
                                      "' is not of the start-period-onward form");
      }
    }
  }

  cri::RiOptions opts;
  opts.statistic = args.statistic == "beta" ? cri::RiStatistic::Beta : cri::RiStatistic::T;
  opts.two_sided = !args.upper_tail;
  opts.b = args.reps;
  opts.seed = args.seed;
  opts.threads = resolve_threads(args.threads);
  const auto result = cri::ri_test(*loaded.data, part, treatment, opts);

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << "\nrandomization inference: " << treatment.treated_clusters.size() << " treated of "
       << part.g_count() << " clusters, statistic RI-"
       << (opts.statistic == cri::RiStatistic::Beta ? "beta" : "t")
       << (opts.two_sided ? " (two-sided)" : " (upper tail)") << '\n';
  text << "observed = " << cri::format_number(result.observed) << '\n';
  text << "S = " << result.s << (result.enumerated ? " (enumerated)" : " (sampled)")
       << (result.skipped > 0 ? "  skipped " + std::to_string(result.skipped) : "") << '\n';
  text << "P1 = " << cri::format_number(result.p1) << "   P2 = " << cri::format_number(result.p2)
       << '\n';
  if (result.crve_unreliable)
    text << "note: with a single treated (or control) cluster the CRVE t-statistic is "
            "unreliable; the RI P value remains meaningful\n";

  json report;
  report["command"] = "ri";
  report["sample"] = sample_block(loaded);
  report["statistic"] = opts.statistic == cri::RiStatistic::Beta ? "beta" : "t";
  report["two_sided"] = opts.two_sided;
  report["observed"] = result.observed;
  report["s"] = result.s;
  report["enumerated"] = result.enumerated;
  report["skipped"] = result.skipped;
  report["p1"] = result.p1;
  report["p2"] = result.p2;
  report["crve_unreliable"] = result.crve_unreliable;
  json settings;
  settings["seed"] = args.seed;
  settings["reps"] = args.reps;
  report["settings"] = settings;

  if (!args.dump_replicates.empty()) {
    std::ofstream out(args.dump_replicates, std::ios::binary);
    if (!out) throw cri::validation_error("cannot write to '" + args.dump_replicates + "'");
    out << "replicate,statistic\n";
    for (std::size_t idx = 0; idx < result.replicates.size(); ++idx)
      out << idx << ',' << cri::format_number(result.replicates[idx]) << '\n';
  }
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// placebo

struct PlaceboArgs {
  DataArgs data;
  OutputArgs output;
  BootArgs boot;
  std::string design = "did";
  std::string placebo_cluster;
  std::string period;
  index_t treated = 25;
  double rho = 0.5;
  double delta = 0.9;
  std::string methods = "hc1,cv1,cv3,wcr";
  double level = 0.05;
  index_t reps = 1000;
  unsigned threads = 0;
};

int cmd_placebo(const PlaceboArgs& args) {
  DataArgs base_args = args.data;
  const std::string absorb_col = base_args.absorb;
  base_args.absorb.clear();  // absorption happens inside the experiment, per replication
  const auto loaded = load_data(base_args);
  if (loaded.cluster_cols.empty())
    throw cri::validation_error("placebo needs --cluster levels for the test methods");
  const std::string placebo_col =
      args.placebo_cluster.empty() ? loaded.cluster_cols.front() : args.placebo_cluster;
  const auto placebo_part = cri::build_partition(loaded.table.string_column(placebo_col));
  if (args.period.empty()) throw cri::validation_error("placebo needs --period");

  index_t periods = 0;
  const auto period_of_obs = period_codes(loaded.table, args.period, periods);

  std::optional<cri::ClusterPartition> absorb;
  if (!absorb_col.empty()) absorb = cri::build_partition(loaded.table.string_column(absorb_col));

  cri::PlaceboSpec spec;
  spec.design = args.design == "ar1" ? cri::PlaceboDesign::Ar1Blend : cri::PlaceboDesign::DidDummy;
  spec.treated_count = args.treated;
  spec.rho = args.rho;
  spec.delta = args.delta;

  std::vector<cri::PlaceboMethod> methods;
  for (const auto& name : split_list(args.methods)) {
    cri::PlaceboMethod method;
    method.kind = cri::method_from_string(name);
    method.level = loaded.cluster_cols.front();
    method.wild = wild_options(args.boot, placebo_part.g_count(), 1);
    methods.push_back(method);
  }

  cri::PlaceboOptions opts;
  opts.level = args.level;
  opts.reps = args.reps;
  opts.seed = args.boot.seed;
  opts.threads = resolve_threads(args.threads);
  const auto result =
      cri::placebo_experiment(*loaded.data, placebo_part, period_of_obs, periods,
                              loaded.partitions, absorb ? &*absorb : nullptr, spec, methods, opts);

  std::ostringstream text;
  print_sample_block(text, loaded);
  text << "\nplacebo design: " << args.design << " over '" << placebo_col << "' x '" << args.period
       << "', " << args.reps << " replications, " << cri::format_number(100.0 * args.level)
       << "% level\n";
  if (result.redrawn > 0) text << "redrawn collinear placebo draws: " << result.redrawn << '\n';
  text << "\n method          level           reject%     mc-se\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    text << ' ' << std::left;
    text.width(15);
    text << row.method;
    text.width(12);
    text << row.level;
    text << fmt(row.reject_pct, 10) << fmt(row.mc_se_pct, 9) << '\n';
    json jrow;
    jrow["method"] = row.method;
    jrow["level"] = row.level;
    jrow["reject_pct"] = row.reject_pct;
    jrow["mc_se_pct"] = row.mc_se_pct;
    rows.push_back(jrow);
  }

  json report;
  report["command"] = "placebo";
  report["sample"] = sample_block(loaded);
  report["design"] = args.design;
  report["rows"] = rows;
  report["redrawn"] = result.redrawn;
  json settings;
  settings["seed"] = args.boot.seed;
  settings["reps"] = args.reps;
  settings["level"] = args.level;
  report["settings"] = settings;
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  OutputArgs output;
  BootArgs boot;
  std::string dgp = "factor";
  index_t g_count = 50;
  index_t n_total = 1000;
  std::string pattern = "equal";
  double lambda = 1.0;
  double omega = 1.0;
  double sigma = 1.0;
  double share = 0.5;
  std::string placebo = "dummy";
  double dummy_share = 0.5;
  bool heavy_tails = false;
  std::string methods = "hc1,cv1,cv3,wcr";
  double level = 0.05;
  index_t reps = 2000;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& args) {
  cri::DGPSpec spec;
  if (args.dgp == "iid") spec.kind = cri::DgpKind::Iid;
  else if (args.dgp == "random-effects") spec.kind = cri::DgpKind::RandomEffects;
  else if (args.dgp == "factor") spec.kind = cri::DgpKind::Factor;
  else throw cri::validation_error("unknown DGP '" + args.dgp + "'");
  spec.g_count = args.g_count;
  spec.n_total = args.n_total;
  spec.lambda = args.lambda;
  spec.omega = args.omega;
  spec.lognormal_sigma = args.sigma;
  spec.dominant_share = args.share;
  spec.heavy_tails = args.heavy_tails;
  if (args.pattern == "equal") spec.pattern = cri::SizePattern::Equal;
  else if (args.pattern == "lognormal") spec.pattern = cri::SizePattern::Lognormal;
  else if (args.pattern == "one-dominant") spec.pattern = cri::SizePattern::OneDominant;
  else throw cri::validation_error("unknown size pattern '" + args.pattern + "'");
  spec.placebo =
      args.placebo == "normal" ? cri::PlaceboKind::ClusterNormal : cri::PlaceboKind::ClusterDummy;
  spec.dummy_share = args.dummy_share;

  std::vector<cri::McMethod> methods;
  for (const auto& name : split_list(args.methods)) {
    cri::McMethod method;
    method.kind = cri::method_from_string(name);
    method.clustered = method.kind != cri::MethodKind::HC1Normal;
    method.wild = wild_options(args.boot, spec.g_count, 1);
    methods.push_back(method);
  }

  cri::McOptions opts;
  opts.level = args.level;
  opts.reps = args.reps;
  opts.seed = args.boot.seed;
  opts.threads = resolve_threads(args.threads);
  const auto result = cri::run_size_experiment(spec, methods, opts);

  std::ostringstream text;
  text << "size experiment: " << args.dgp << " DGP, G = " << spec.g_count
       << ", N = " << spec.n_total << ", " << args.pattern << " sizes, "
       << cri::format_number(100.0 * args.level) << "% level, " << args.reps
       << " replications\n\n";
  text << " method          reject%     mc-se\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    text << ' ' << std::left;
    text.width(15);
    text << row.method;
    text << fmt(row.reject_pct, 10) << fmt(row.mc_se_pct, 9) << '\n';
    json jrow;
    jrow["method"] = row.method;
    jrow["reject_pct"] = row.reject_pct;
    jrow["mc_se_pct"] = row.mc_se_pct;
    rows.push_back(jrow);
  }

  json report;
  report["command"] = "simulate";
  report["dgp"] = args.dgp;
  report["g"] = spec.g_count;
  report["n"] = spec.n_total;
  report["pattern"] = args.pattern;
  report["rows"] = rows;
  json settings;
  settings["seed"] = args.boot.seed;
  settings["reps"] = args.reps;
  settings["level"] = args.level;
  settings["boot_reps"] = args.boot.reps;
  report["settings"] = settings;
  emit(args.output, text.str(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// gendata: synthetic stand-in for a minimum-wage style panel

struct GendataArgs {
  std::string out_path;
  index_t states = 12;
  index_t years = 8;
  index_t n_total = 1500;
  std::uint64_t seed = 20250809;
};

int cmd_gendata(const GendataArgs& args) {
  if (args.states < 2 || args.years < 2)
    throw cri::validation_error("gendata needs at least two states and two years");
  cri::Rng rng(args.seed);

  // unequal state sizes; state wage floors follow an AR(1) around a trend
  std::vector<double> weights(static_cast<std::size_t>(args.states));
  double total_weight = 0.0;
  for (auto& w : weights) {
    w = std::exp(0.8 * rng.next_normal());
    total_weight += w;
  }
  const Eigen::MatrixXd mw_shock = cri::gen_ar1_panel(args.states, args.years, 0.9, rng);
  // independent state-year disturbance factor: scores stay clustered at the
  // state level without making the regressor endogenous
  const Eigen::MatrixXd u_shock = cri::gen_ar1_panel(args.states, args.years, 0.7, rng);
  std::vector<double> state_effect(static_cast<std::size_t>(args.states));
  for (auto& e : state_effect) e = 1.5 * rng.next_normal();
  std::vector<double> year_effect(static_cast<std::size_t>(args.years));
  for (auto& e : year_effect) e = 0.4 * rng.next_normal();

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw cri::validation_error("cannot write to '" + args.out_path + "'");
  out << "hours,minwage,age,female,state,year\n";
  index_t written = 0;
  for (index_t s = 0; s < args.states; ++s) {
    index_t rows = std::max<index_t>(
        args.years,
        static_cast<index_t>(std::floor(weights[static_cast<std::size_t>(s)] / total_weight *
                                        static_cast<double>(args.n_total))));
    if (s == args.states - 1) rows = std::max(rows, args.n_total - written);
    for (index_t r = 0; r < rows; ++r) {
      const index_t t = r % args.years;
      const double minwage = 5.0 + 0.6 * state_effect[static_cast<std::size_t>(s)] +
                             0.15 * static_cast<double>(t) + 0.5 * mw_shock(s, t);
      const double age = 16.0 + static_cast<double>(rng.below(4));
      const double female = rng.below(2) ? 1.0 : 0.0;
      // factor-loaded state-year disturbance keeps the scores clustered even
      // with state fixed effects in the model
      const double loading = 0.5 + 1.0 * rng.next_double();
      const double hours = 30.0 - 0.8 * minwage + 0.3 * (age - 17.5) - 1.5 * female +
                           state_effect[static_cast<std::size_t>(s)] +
                           year_effect[static_cast<std::size_t>(t)] + loading * u_shock(s, t) +
                           2.0 * rng.next_normal();
      out << cri::format_number(hours) << ',' << cri::format_number(minwage) << ','
          << cri::format_number(age) << ',' << female << ",state" << s << ",y" << (2005 + t)
          << '\n';
      ++written;
    }
  }
  std::cerr << "wrote " << written << " rows to " << args.out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crinfer: cluster-robust inference for linear regression"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "config file given before the subcommand (INI: key=value under a\n"
                 "[subcommand] section); command-line flags override config values");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "estimate and report per-method standard errors");
  fit_cmd->configurable();
  add_data_options(fit_cmd, fit_args.data);
  add_output_options(fit_cmd, fit_args.output);
  fit_cmd->add_option("--methods", fit_args.methods, "comma list of hc1,cv1,cv2,cv3");

  TestArgs test_args;
  auto* test_cmd = app.add_subcommand("test", "test a coefficient across methods");
  test_cmd->configurable();
  add_data_options(test_cmd, test_args.data);
  add_output_options(test_cmd, test_args.output);
  add_boot_options(test_cmd, test_args.boot);
  test_cmd->add_option("--coef", test_args.coef, "coefficient under test");
  test_cmd->add_option("--null", test_args.null_value, "null value (default 0)");
  test_cmd->add_option("--methods", test_args.methods,
                       "comma list of hc1,cv1,cv2,cv3,wcr,wcu,pairs,twoway");
  test_cmd->add_option("--wald-zero", test_args.wald_zero,
                       "also run a joint Wald test that these coefficients are zero");
  test_cmd
      ->add_option("--ci", test_args.ci,
                   "confidence interval: none, inversion, se, percentile-t, or all")
      ->check(CLI::IsMember({"none", "inversion", "se", "percentile-t", "all"}));
  test_cmd->add_option("--alpha", test_args.alpha, "CI significance level (default 0.05)");
  test_cmd->add_option("--dump-replicates", test_args.dump_replicates,
                       "write WCU bootstrap replicates to a CSV file");
  test_cmd->add_option("--threads", test_args.threads, "worker threads (default CRINFER_THREADS)");

  DiagnoseArgs diag_args;
  auto* diag_cmd = app.add_subcommand("diagnose", "cluster leverage, influence, and size report");
  diag_cmd->configurable();
  add_data_options(diag_cmd, diag_args.data);
  add_output_options(diag_cmd, diag_args.output);
  diag_cmd->add_option("--coef", diag_args.coef, "coefficient for partial leverage and influence");
  diag_cmd->add_option("--csv-out", diag_args.csv_out, "write per-cluster rows to a CSV file");
  diag_cmd->add_option("--edf-out", diag_args.edf_out, "write EDF plot data to a CSV file");

  LevelArgs level_args;
  auto* level_cmd = app.add_subcommand("leveltest", "score-variance tests for clustering levels");
  level_cmd->configurable();
  add_data_options(level_cmd, level_args.data);
  add_output_options(level_cmd, level_args.output);
  level_cmd
      ->add_option("--levels", level_args.levels,
                   "comma list from fine to coarse; 'none' = observation level")
      ->required();
  level_cmd->add_option("--coef", level_args.coef, "coefficient whose scores are tested");
  level_cmd->add_option("--boot-reps", level_args.reps, "bootstrap replications (default 999)");
  level_cmd->add_option("--seed", level_args.seed, "RNG seed");
  level_cmd->add_option("--threads", level_args.threads, "worker threads");

  RiArgs ri_args;
  auto* ri_cmd = app.add_subcommand("ri", "randomization inference for cluster-level treatment");
  ri_cmd->configurable();
  add_data_options(ri_cmd, ri_args.data);
  add_output_options(ri_cmd, ri_args.output);
  ri_cmd->add_option("--treatment", ri_args.treatment, "0/1 treatment column")->required();
  ri_cmd->add_option("--period", ri_args.period, "period column for DiD-style treatment");
  ri_cmd->add_option("--statistic", ri_args.statistic, "beta or t")
      ->check(CLI::IsMember({"beta", "t"}));
  ri_cmd->add_flag("--upper-tail", ri_args.upper_tail, "one-sided upper-tail P values");
  ri_cmd->add_flag("--redraw-starts", ri_args.redraw_starts,
                   "redraw DiD start periods per re-randomization");
  ri_cmd->add_option("--reps", ri_args.reps, "maximum re-randomizations (default 9999)");
  ri_cmd->add_option("--seed", ri_args.seed, "RNG seed");
  ri_cmd->add_option("--threads", ri_args.threads, "worker threads");
  ri_cmd->add_option("--dump-replicates", ri_args.dump_replicates,
                     "write replicate statistics to a CSV file");

  PlaceboArgs placebo_args;
  auto* placebo_cmd = app.add_subcommand("placebo", "placebo-regression rejection rates");
  placebo_cmd->configurable();
  add_data_options(placebo_cmd, placebo_args.data);
  add_output_options(placebo_cmd, placebo_args.output);
  add_boot_options(placebo_cmd, placebo_args.boot);
  placebo_cmd->add_option("--design", placebo_args.design, "did or ar1")
      ->check(CLI::IsMember({"did", "ar1"}));
  placebo_cmd->add_option("--placebo-cluster", placebo_args.placebo_cluster,
                          "level the placebo varies over (default: first --cluster column)");
  placebo_cmd->add_option("--period", placebo_args.period, "period column")->required();
  placebo_cmd->add_option("--treated", placebo_args.treated, "DiD treated cluster count");
  placebo_cmd->add_option("--rho", placebo_args.rho, "AR(1) coefficient");
  placebo_cmd->add_option("--delta", placebo_args.delta, "AR(1) blend weight");
  placebo_cmd->add_option("--methods", placebo_args.methods, "comma list of methods");
  placebo_cmd->add_option("--level", placebo_args.level, "test level (default 0.05)");
  placebo_cmd->add_option("--reps", placebo_args.reps, "replications (default 1000)");
  placebo_cmd->add_option("--threads", placebo_args.threads, "worker threads");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo size experiment");
  sim_cmd->configurable();
  add_output_options(sim_cmd, sim_args.output);
  add_boot_options(sim_cmd, sim_args.boot);
  sim_cmd->add_option("--dgp", sim_args.dgp, "iid, random-effects, or factor");
  sim_cmd->add_option("--g", sim_args.g_count, "number of clusters");
  sim_cmd->add_option("--n", sim_args.n_total, "total observations");
  sim_cmd->add_option("--pattern", sim_args.pattern, "equal, lognormal, or one-dominant");
  sim_cmd->add_option("--lambda", sim_args.lambda, "cluster shock loading");
  sim_cmd->add_option("--omega", sim_args.omega, "idiosyncratic shock scale");
  sim_cmd->add_option("--sigma", sim_args.sigma, "lognormal size spread");
  sim_cmd->add_option("--share", sim_args.share, "dominant cluster share of N");
  sim_cmd->add_option("--placebo", sim_args.placebo, "placebo regressor: dummy or normal");
  sim_cmd->add_option("--dummy-share", sim_args.dummy_share, "share of clusters with the dummy");
  sim_cmd->add_flag("--heavy-tails", sim_args.heavy_tails, "Student-t(5) shocks");
  sim_cmd->add_option("--methods", sim_args.methods, "comma list of methods");
  sim_cmd->add_option("--level", sim_args.level, "test level (default 0.05)");
  sim_cmd->add_option("--reps", sim_args.reps, "replications (default 2000)");
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads");

  GendataArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gendata", "write a synthetic minimum-wage style panel");
  gen_cmd->configurable();
  gen_cmd->add_option("--out", gen_args.out_path, "output CSV path")->required();
  gen_cmd->add_option("--states", gen_args.states, "number of states");
  gen_cmd->add_option("--years", gen_args.years, "number of years");
  gen_cmd->add_option("--n", gen_args.n_total, "approximate total rows");
  gen_cmd->add_option("--seed", gen_args.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_args);
    if (*test_cmd) return cmd_test(test_args);
    if (*diag_cmd) return cmd_diagnose(diag_args);
    if (*level_cmd) return cmd_leveltest(level_args);
    if (*ri_cmd) return cmd_ri(ri_args);
    if (*placebo_cmd) return cmd_placebo(placebo_args);
    if (*sim_cmd) return cmd_simulate(sim_args);
    if (*gen_cmd) return cmd_gendata(gen_args);
  } catch (const cri::validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const cri::numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
