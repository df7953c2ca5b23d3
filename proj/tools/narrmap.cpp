// SPDX-License-Identifier: Apache-2.0
// Command-line front end: corpus generation, map extraction, simulation and the HTTP service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "narrmap/error.hpp"
#include "narrmap/serialize.hpp"
#include "narrmap/service.hpp"
#include "narrmap/simulation.hpp"

namespace fs = std::filesystem;
using namespace narrmap;

namespace {

struct ParamFlags {
  std::size_t K = 6;
  double mincover = 0.2;
  double sigma_t = 30.0;
  std::optional<double> lambda;
  std::optional<std::size_t> start;
  std::string start_match;

  void add(CLI::App* app, bool with_start) {
    app->add_option("--K,-K", K, "Expected main storyline length")->capture_default_str();
    app->add_option("--mincover", mincover, "Minimum average topical coverage")->capture_default_str();
    app->add_option("--sigma-t,--sigma_t", sigma_t, "Temporal sensitivity in days")->capture_default_str();
    app->add_option("--lambda", lambda, "Edge regularization strength (default 2/(n(n-1)))");
    if (with_start) app->add_option("--start", start, "Start document id");
    app->add_option("--start-match", start_match, "Start at the earliest document matching this predicate");
  }

  ExtractionParams params(const Corpus& corpus) const {
    ExtractionParams p;
    p.K = K;
    p.mincover = mincover;
    p.sigma_t = sigma_t;
    p.lambda = lambda;
    if (start) p.start = *start;
    else if (!start_match.empty()) p.start = find_start(corpus, DocPredicate::parse(start_match));
    return p;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

std::vector<InteractionEvent> read_history(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open history file " + path.string());
  const auto j = nlohmann::json::parse(in);
  const auto& list = j.is_object() ? j.at("history") : j;
  std::vector<InteractionEvent> out;
  for (const auto& e : list) out.push_back(event_from_json(e));
  return out;
}

std::vector<KeywordPlant> parse_plants(const std::vector<std::string>& specs) {
  std::vector<KeywordPlant> out;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ParameterError("plant '" + s + "' is not tag:fraction");
    KeywordPlant p;
    p.tag = s.substr(0, colon);
    p.fraction = std::stod(s.substr(colon + 1));
    out.push_back(p);
  }
  return out;
}

void print_summary(const Session& s) {
  const auto& m = s.current_map();
  std::cout << "documents        " << s.corpus().size() << "\n"
            << "start            " << m.start << "\n"
            << "nodes            " << m.graph.nodes.size() << "\n"
            << "edges            " << m.graph.edges.size() << "\n"
            << "storylines       " << m.storylines.size() << "\n"
            << "main story       " << m.main_path.size() << "\n"
            << "minedge          " << m.minedge << "\n"
            << "objective        " << m.objective << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive narrative map extraction"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus");
  SyntheticSpec synth;
  std::vector<std::string> plants;
  fs::path gen_out;
  gen->add_option("--out,-o", gen_out, "Output corpus (JSON lines)")->required();
  gen->add_option("--n", synth.n, "Number of documents")->capture_default_str();
  gen->add_option("--topics", synth.topics, "Number of topics")->capture_default_str();
  gen->add_option("--dim", synth.embedding_dim, "Embedding dimension")->capture_default_str();
  gen->add_option("--span-days", synth.time_span_days, "Time span in days")->capture_default_str();
  gen->add_option("--noise", synth.noise_scale, "Embedding noise scale")->capture_default_str();
  gen->add_option("--leaning-offset", synth.leaning_offset, "Embedding shift for left/right documents")
      ->capture_default_str();
  gen->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  gen->add_option("--plant", plants, "Keyword plant tag:fraction (repeatable)");

  // extract
  auto* ext = app.add_subcommand("extract", "Extract a narrative map from a corpus");
  fs::path ext_corpus, ext_out, ext_layout, ext_history, ext_snapshot;
  std::uint64_t ext_seed = 1;
  std::string ext_solver;
  ParamFlags ext_params;
  ext->add_option("--corpus,-c", ext_corpus, "Corpus file")->required();
  ext->add_option("--out,-o", ext_out, "Map file")->required();
  ext->add_option("--layout", ext_layout, "Layout file (default: <out>.layout.json)");
  ext->add_option("--history", ext_history, "Interaction history to replay (JSON array)");
  ext->add_option("--snapshot", ext_snapshot, "Also write a session snapshot");
  ext->add_option("--seed", ext_seed, "Projection seed")->capture_default_str();
  ext->add_option("--solver", ext_solver, "LP solver: fractional, column-generation or direct");
  ext_params.add(ext, true);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the simulated analyst");
  fs::path sim_corpus, sim_out = "simulation";
  std::string sim_task = "T1";
  std::vector<std::string> sim_labels;
  TaskSpec task_spec;
  bool sim_compare = false;
  std::uint64_t sim_seed = 1;
  ParamFlags sim_params;
  sim_params.start_match = "leaning:center";
  sim->add_option("--corpus,-c", sim_corpus, "Corpus file")->required();
  sim->add_option("--task,-t", sim_task, "T1, T2, T3, T4 or T5")->capture_default_str();
  sim->add_option("--label,-l", sim_labels, "Label predicate (repeat for T4 clusters)");
  sim->add_option("--samples", task_spec.samples, "Valid samples to collect")->capture_default_str();
  sim->add_option("--max-iterations", task_spec.max_iterations, "Iteration cap")->capture_default_str();
  sim->add_option("--target-error", task_spec.target_error, "Stop at or below this error")->capture_default_str();
  sim->add_option("--seed", sim_seed, "First projection seed")->capture_default_str();
  sim->add_option("--out-dir,-o", sim_out, "Output directory")->capture_default_str();
  sim->add_flag("--compare-regularization", sim_compare, "Run lambda = 0 against the default lambda");
  sim->add_flag("--t2-remove-nodes", task_spec.t2_remove_nodes, "T2 analyst removes nodes instead of edges");
  sim_params.add(sim, false);

  // serve
  auto* srv = app.add_subcommand("serve", "Serve the HTTP API");
  ServerOptions server = server_options_from_env();
  std::string bind;
  fs::path data_dir = std::getenv("NARRMAP_DATA_DIR") ? fs::path(std::getenv("NARRMAP_DATA_DIR")) : fs::path("data");
  srv->add_option("--bind", bind, "host:port (default $NARRMAP_BIND or 127.0.0.1:8080)");
  srv->add_option("--data-dir", data_dir, "Data directory (default $NARRMAP_DATA_DIR or ./data)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      synth.keyword_plants = parse_plants(plants);
      const auto corpus = generate_synthetic_corpus(synth);
      if (gen_out.has_parent_path()) fs::create_directories(gen_out.parent_path());
      save_corpus(corpus, gen_out);
      std::cout << "wrote " << corpus.size() << " documents to " << gen_out.string() << "\n";
      return 0;
    }
    if (*ext) {
      auto corpus = std::make_shared<const Corpus>(load_corpus(ext_corpus));
      SessionConfig config;
      if (!ext_solver.empty()) config.solver = ext_solver;
      auto session = Session::create(corpus, ext_params.params(*corpus), ext_seed, config);
      if (!ext_history.empty()) {
        for (auto& e : read_history(ext_history)) session.apply(std::move(e));
        session.regenerate();
      }
      const auto layout = session.current_layout();
      write_file(ext_out, dump_stable(map_to_json(session.current_map(), *corpus, layout)));
      if (ext_layout.empty()) ext_layout = fs::path(ext_out.string() + ".layout.json");
      write_file(ext_layout, dump_stable(layout_to_json(layout)));
      if (!ext_snapshot.empty()) save_session(session, ext_snapshot, fs::absolute(ext_corpus));
      print_summary(session);
      return 0;
    }
    if (*sim) {
      auto corpus = std::make_shared<const Corpus>(load_corpus(sim_corpus));
      task_spec.task = parse_task(sim_task);
      for (const auto& l : sim_labels) task_spec.labels.push_back(DocPredicate::parse(l));
      if (task_spec.labels.empty() && task_spec.task != Task::T2 && task_spec.task != Task::T3)
        throw ParameterError("task " + sim_task + " needs at least one --label");
      SimulationSetup setup;
      setup.params = sim_params.params(*corpus);
      setup.start = DocPredicate::parse(sim_params.start_match);
      setup.first_seed = sim_seed;
      setup.on_sample = [](const SampleResult& s) {
        std::cout << "seed " << s.seed << ": " << s.iterations.size() << " maps, "
                  << (s.converged_at ? "converged at " + std::to_string(*s.converged_at) : std::string("not converged"))
                  << (s.failed ? " (failed: " + s.failure + ")" : std::string()) << "\n";
      };
      fs::create_directories(sim_out);
      auto write = [&](const SimulationResult& r, const std::string& stem) {
        std::ofstream samples(sim_out / (stem + "_samples.csv"));
        write_samples_csv(samples, r);
        std::ofstream aggregate(sim_out / (stem + "_aggregate.csv"));
        write_aggregate_csv(aggregate, r);
        std::cout << stem << ": " << r.samples.size() << " samples, " << r.discarded_seeds.size() << " discarded, "
                  << r.converged_within(task_spec.max_iterations) << " converged\n";
      };
      const std::string stem(to_string(task_spec.task));
      if (sim_compare) {
        const auto cmp = complexity_comparison(task_spec, corpus, setup);
        write(cmp.unregularized, stem + "_lambda0");
        write(cmp.regularized, stem + "_regularized");
        std::cout << "mean edge increase: lambda=0 " << mean_edge_increase(cmp.unregularized) << ", regularized "
                  << mean_edge_increase(cmp.regularized) << "\n";
      } else {
        write(simulate_task(task_spec, corpus, setup), stem);
      }
      return 0;
    }
    if (*srv) {
      if (!bind.empty()) {
        ::setenv("NARRMAP_BIND", bind.c_str(), 1);
        server = server_options_from_env();
      }
      Service service(data_dir);
      std::signal(SIGINT, [](int) { stop_http_server(); });
      std::signal(SIGTERM, [](int) { stop_http_server(); });
      run_http_server(service, server, [&](int port) {
        std::cout << "listening on " << server.host << ":" << port << std::endl;
      });
      return 0;
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
