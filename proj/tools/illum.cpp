// Command-line front end: interactive sessions, one-shot questions, the
// scripted-user experiment, polynomial fitting, reach-set plots, and the
// HTTP service.

#include <unistd.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "illum/illum.hpp"
#include "illum/service.hpp"

#include <cli11/CLI11.hpp>

using namespace illum;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCap = 3;

struct PackArgs {
  std::string pack, model, labels;
};

void add_pack_options(CLI::App* app, PackArgs& a, bool model_required = true) {
  app->add_option("--pack", a.pack, "domain pack (JSON)")->required()->check(CLI::ExistingFile);
  auto* m = app->add_option("--model", a.model, "model file (JSON)")->check(CLI::ExistingFile);
  if (model_required) m->required();
  app->add_option("--labels", a.labels, "MA/LA label sidecar (JSON)")->check(CLI::ExistingFile);
}

std::pair<std::shared_ptr<DomainPack>, std::shared_ptr<BoundModel>> load(const PackArgs& a) {
  auto pack = std::make_shared<DomainPack>(load_pack(a.pack, a.labels));
  std::shared_ptr<BoundModel> model;
  if (!a.model.empty()) model = std::make_shared<BoundModel>(load_model(a.model, pack->space()));
  return {pack, model};
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string t;
  while (std::getline(ss, t, ','))
    if (!t.empty()) out.push_back(t);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") std::cout << text;
  else write_file(path, text);
}

Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->server().stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive descriptions of learned systems"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path, "TOML or JSON configuration file")->check(CLI::ExistingFile);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "random seed");
  std::optional<std::size_t> max_boxes;
  app.add_option("--max-boxes", max_boxes, "refinement budget per analysis");
  bool breadth_first = false;
  app.add_flag("--breadth-first", breadth_first, "refine breadth-first (matters only when the box budget runs out)");
  std::string smt_command;
  app.add_option("--smt", smt_command, "SMT solver command reading SMT-LIB on stdin, e.g. \"z3 -in -smt2\"");

  // repl
  auto* repl = app.add_subcommand("repl", "ask questions and steer descriptions interactively");
  PackArgs repl_pack;
  add_pack_options(repl, repl_pack);
  std::optional<double> repl_eps;
  bool repl_echo = false;
  std::optional<std::size_t> repl_page;
  std::string repl_log;
  repl->add_option("--epsilon", repl_eps, "initial refinement parameter");
  repl->add_flag("--echo", repl_echo, "echo input lines (transcripts)");
  repl->add_option("--page", repl_page, "lines per page (0 = no paging)");
  repl->add_option("--history-log", repl_log, "interaction log (newline-delimited JSON)");

  // ask
  auto* ask = app.add_subcommand("ask", "answer one question and print the description");
  PackArgs ask_pack;
  add_pack_options(ask, ask_pack);
  std::string ask_text, ask_dump, ask_json;
  std::optional<double> ask_eps;
  ask->add_option("question", ask_text, "e.g. \"when_do_you out_high?\"")->required();
  ask->add_option("--epsilon", ask_eps, "refinement parameter");
  ask->add_option("--dump-reach", ask_dump, "write the reach set as JSON");
  ask->add_option("--json", ask_json, "write the description as JSON");

  // fit-poly
  auto* fit = app.add_subcommand("fit-poly", "least-squares polynomial fit from CSV");
  std::string fit_csv, fit_in, fit_out_cols, fit_out;
  int fit_degree = 3;
  double fit_test = 0.1;
  std::optional<double> fit_min_r2;
  fit->add_option("--csv", fit_csv, "data with a header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--inputs", fit_in, "comma-separated input columns")->required();
  fit->add_option("--outputs", fit_out_cols, "comma-separated output columns")->required();
  fit->add_option("--degree", fit_degree, "total degree")->check(CLI::Range(1, 8));
  fit->add_option("--test-fraction", fit_test, "held-out fraction")->check(CLI::Range(0.0, 0.9));
  fit->add_option("--out", fit_out, "model file to write");
  fit->add_option("--min-r2", fit_min_r2, "exit 2 when test R^2 falls below this");

  // experiment run
  auto* exp = app.add_subcommand("experiment", "scripted-user experiments");
  exp->require_subcommand(1);
  auto* run = exp->add_subcommand("run", "run scripted sessions and write the change report");
  std::vector<std::string> exp_packs, exp_models, exp_labels;
  std::size_t exp_runs = 60, exp_jobs = 1;
  std::string exp_out, exp_table, exp_trans;
  run->add_option("--pack", exp_packs, "domain pack (repeat for several)")->required()->check(CLI::ExistingFile);
  run->add_option("--model", exp_models, "model per pack, same order")->required()->check(CLI::ExistingFile);
  run->add_option("--labels", exp_labels, "label sidecar per pack, same order")->check(CLI::ExistingFile);
  run->add_option("--runs", exp_runs, "sessions per pack (scripts alternate A, B)");
  run->add_option("--jobs", exp_jobs, "worker threads");
  run->add_option("--out", exp_out, "report CSV ('-' for stdout)")->required();
  run->add_option("--table", exp_table, "text table ('-' for stdout)");
  run->add_option("--transitions", exp_trans, "per-transition CSV");

  // plot-reach
  auto* plot = app.add_subcommand("plot-reach", "2-D projection of a reach-set dump");
  std::string plot_dump, plot_x, plot_y, plot_out, plot_csv;
  std::size_t plot_w = 64, plot_h = 64;
  plot->add_option("--dump", plot_dump, "reach-set JSON from `ask --dump-reach`")->required()->check(CLI::ExistingFile);
  plot->add_option("--x", plot_x, "horizontal axis variable")->required();
  plot->add_option("--y", plot_y, "vertical axis variable")->required();
  plot->add_option("--width", plot_w, "grid columns")->check(CLI::PositiveNumber);
  plot->add_option("--height", plot_h, "grid rows")->check(CLI::PositiveNumber);
  plot->add_option("--out", plot_out, "grayscale PGM file");
  plot->add_option("--csv", plot_csv, "cell volumes as CSV");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP/JSON session service");
  PackArgs serve_pack;
  serve->add_option("--pack", serve_pack.pack, "domain pack to preload")->check(CLI::ExistingFile);
  serve->add_option("--model", serve_pack.model, "model for the preloaded pack")->check(CLI::ExistingFile);
  serve->add_option("--labels", serve_pack.labels, "label sidecar")->check(CLI::ExistingFile);
  std::optional<int> serve_port;
  std::string serve_host = "127.0.0.1";
  serve->add_option("--port", serve_port, "port (0 = pick a free one)");
  serve->add_option("--host", serve_host, "address to bind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    AppConfig cfg;
    if (!config_path.empty()) load_config(cfg, config_path);
    if (const char* env = std::getenv("ILLUM_SMT_COMMAND"); env && !*smt_command.c_str()) smt_command = env;
    if (!smt_command.empty()) cfg.smt = SmtConfig{smt_command, cfg.smt ? cfg.smt->timeout_ms : 10000};
    if (seed) cfg.seed = *seed;
    if (max_boxes) cfg.reach.analysis.max_boxes = *max_boxes;
    if (breadth_first) cfg.reach.analysis.breadth_first = true;

    if (*repl) {
      auto [pack, model] = load(repl_pack);
      SessionConfig sc = cfg.session_config();
      if (repl_eps) sc.initial.epsilon = *repl_eps;
      std::string log = repl_log.empty() ? cfg.history_log : repl_log;
      auto store = std::make_shared<HistoryStore>(log);
      if (!log.empty()) {
        auto skipped = store->load();
        if (skipped) std::cerr << "warning: skipped " << skipped << " unreadable history lines\n";
      }
      Session s(pack, model, sc, cfg.decider(), store);
      ReplOptions ro;
      ro.echo = repl_echo;
      ro.page_lines = repl_page.value_or(isatty(STDIN_FILENO) ? 20 : 0);
      Repl r(s, std::cin, std::cout, ro);
      r.run();
      return kExitOk;
    }

    if (*ask) {
      auto [pack, model] = load(ask_pack);
      SessionConfig sc = cfg.session_config();
      if (ask_eps) sc.initial.epsilon = *ask_eps;
      Session s(pack, model, sc, cfg.decider());
      Question q = parse_question(ask_text);
      const auto& st = s.ask(q);
      std::cout << "t=0 eps=" << st.params.epsilon << " boxes=" << st.reach.pairs.size() << '\n';
      std::cout << (st.message.empty() ? render_description(st.description, *pack) : st.message + "\n");
      if (!ask_dump.empty()) write_text(ask_dump, reach_to_json(st.reach, *pack).dump(1) + "\n");
      if (!ask_json.empty()) write_text(ask_json, description_to_json(st.description, *pack).dump(1) + "\n");
      if (st.reach.stats.cap_hit) {
        std::cerr << "analysis budget of " << cfg.reach.analysis.max_boxes
                  << " boxes exhausted; unrefined boxes were kept\n";
        return kExitCap;
      }
      return kExitOk;
    }

    if (*fit) {
      auto table = read_csv_file(fit_csv);
      auto data = select_columns(table, split_names(fit_in), split_names(fit_out_cols));
      FitOptions fo;
      fo.test_fraction = fit_test;
      fo.seed = cfg.seed;
      auto res = fit_polynomial(data, fit_degree, fo);
      std::printf("rows: %zu train, %zu test\ntrain R^2: %.6f\ntest R^2: %.6f\n", res.train_rows, res.test_rows,
                  res.train_r2, res.test_r2);
      if (!fit_out.empty())
        write_file(fit_out, model_to_json(res.model, data.input_names, data.output_names).dump(1) + "\n");
      if (fit_min_r2 && !(res.test_r2 >= *fit_min_r2)) {
        std::fprintf(stderr, "test R^2 %.6f is below the required %.6f\n", res.test_r2, *fit_min_r2);
        return kExitValidation;
      }
      return kExitOk;
    }

    if (*run) {
      if (exp_models.size() != exp_packs.size()) throw Error("give one --model per --pack");
      if (!exp_labels.empty() && exp_labels.size() != exp_packs.size()) throw Error("give one --labels per --pack");
      std::vector<PackRuns> all;
      for (std::size_t i = 0; i < exp_packs.size(); ++i) {
        PackArgs pa{exp_packs[i], exp_models[i], exp_labels.empty() ? "" : exp_labels[i]};
        auto [pack, model] = load(pa);
        ExperimentConfig ec;
        ec.runs = exp_runs;
        ec.seed = mix_seed(cfg.seed, i);
        ec.jobs = exp_jobs;
        ec.session = cfg.session_config();
        all.push_back(run_experiment(pack, model, ec, cfg.decider()));
        std::size_t capped = 0;
        for (const auto& r : all.back().runs) capped += r.cap_hit;
        std::cerr << pack->name() << ": " << exp_runs << " sessions, " << capped << " hit the analysis budget\n";
      }
      auto cols = aggregate(all);
      std::ostringstream csv;
      write_report_csv(csv, cols);
      write_text(exp_out, csv.str());
      if (!exp_table.empty()) {
        std::ostringstream t;
        write_report_table(t, cols);
        write_text(exp_table, t.str());
      }
      if (!exp_trans.empty()) {
        std::ostringstream t;
        write_transitions_csv(t, all);
        write_text(exp_trans, t.str());
      }
      return kExitOk;
    }

    if (*plot) {
      auto dump = reach_dump_from_json(read_json_file(plot_dump));
      auto p = project_boxes(dump.inputs, dump.space.input_bounding(), dump.space.require(plot_x),
                             dump.space.require(plot_y), plot_w, plot_h);
      if (plot_out.empty() && plot_csv.empty()) plot_out = "-";
      if (!plot_out.empty()) {
        std::ostringstream o;
        write_pgm(o, p);
        write_text(plot_out, o.str());
      }
      if (!plot_csv.empty()) {
        std::ostringstream o;
        write_projection_csv(o, p);
        write_text(plot_csv, o.str());
      }
      return kExitOk;
    }

    if (*serve) {
      ServiceOptions so;
      so.session = cfg.session_config();
      so.decider = cfg.decider();
      if (!cfg.history_log.empty()) {
        so.history = std::make_shared<HistoryStore>(cfg.history_log);
        so.history->load();
      }
      Service svc(so);
      if (!serve_pack.pack.empty()) {
        auto [pack, model] = load(serve_pack);
        std::cerr << "pack '" << svc.add_pack(pack, model) << "' loaded\n";
      }
      int port = svc.bind(serve_host, serve_port.value_or(cfg.port));
      if (port < 0) throw Error("could not bind a port on " + serve_host);
      std::cout << "listening on " << serve_host << ":" << port << std::endl;
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.serve();
      g_service = nullptr;
      return kExitOk;
    }
  } catch (const Session::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kExitValidation;
  } catch (const QuestionSyntaxError& e) {
    std::cerr << "invalid question: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
