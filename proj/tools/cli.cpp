#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "compsnn/checkpoint.hpp"
#include "compsnn/error.hpp"
#include "compsnn/experiment.hpp"
#include "compsnn/explain.hpp"
#include "compsnn/gradcheck.hpp"
#include "compsnn/io.hpp"
#include "compsnn/synthetic.hpp"

namespace compsnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kGradTolerance = 1e-4;

struct Settings {
  std::string config_file;
  std::uint64_t seed{42};
  std::string data_dir{"data"};
  std::string out_dir{"out"};
  double cell_size{0.0};
  std::size_t epochs{100};
  double lr{0.05};
  std::size_t batch{16};
  std::size_t filters{4};
  std::size_t degree{5};
  std::string model{"all"};
  std::string traj_id;
  std::size_t n_traj{200};
  std::string channel{"0"};
};

// Values from the JSON config fill every option that was not given on the
// command line.
void apply_config_file(CLI::App& sub, Settings& s) {
  if (s.config_file.empty()) return;
  std::ifstream in(s.config_file);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + s.config_file);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, s.config_file + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  const auto fill = [&](const char* key, const char* flag, auto& field) {
    if (!doc.contains(key)) return;
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) return;
    try {
      doc.at(key).get_to(field);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("config key '") + key + "': " + e.what());
    }
  };
  fill("seed", "--seed", s.seed);
  fill("data_dir", "--data-dir", s.data_dir);
  fill("out_dir", "--out-dir", s.out_dir);
  fill("cell_size", "--cell-size", s.cell_size);
  fill("epochs", "--epochs", s.epochs);
  fill("lr", "--lr", s.lr);
  fill("batch", "--batch", s.batch);
  fill("filters", "--filters", s.filters);
  fill("degree", "--degree", s.degree);
  fill("model", "--model", s.model);
  fill("traj_id", "--traj-id", s.traj_id);
  fill("n_traj", "--n-traj", s.n_traj);
  fill("channel", "--channel", s.channel);
}

ExperimentConfig experiment_config(const Settings& s) {
  ExperimentConfig cfg;
  cfg.seed = s.seed;
  cfg.cell_size = s.cell_size;
  cfg.model.gcnn_filters = s.filters;
  cfg.model.gcnn_degree = s.degree;
  cfg.train.epochs = s.epochs;
  cfg.train.lr = s.lr;
  cfg.train.batch = s.batch;
  cfg.train.seed = s.seed;
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"train_fraction", format_double(cfg.train_fraction)},
              {"cell_size", format_double(cfg.cell_size)},
              {"min_separation", cfg.min_separation},
              {"epsilon_floor", format_double(cfg.epsilon_floor)},
              {"direction_mode", cfg.features.direction_mode == DirectionMode::heading ? "heading" : "position_bearing"},
              {"window", cfg.features.window},
              {"entropy_bins", cfg.features.entropy_bins}};
}

ExperimentConfig experiment_from_json(const json& doc) {
  try {
    ExperimentConfig cfg;
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.train_fraction = parse_double(doc.at("train_fraction").get<std::string>());
    cfg.cell_size = parse_double(doc.at("cell_size").get<std::string>());
    cfg.min_separation = doc.at("min_separation").get<std::size_t>();
    cfg.epsilon_floor = parse_double(doc.at("epsilon_floor").get<std::string>());
    cfg.features.direction_mode = doc.at("direction_mode").get<std::string>() == "heading"
                                      ? DirectionMode::heading
                                      : DirectionMode::position_bearing;
    cfg.features.window = doc.at("window").get<std::size_t>();
    cfg.features.entropy_bins = doc.at("entropy_bins").get<std::size_t>();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("experiment.json: ") + e.what());
  }
}

struct Dataset {
  std::vector<RawTrajectory> trajectories;
  std::vector<DemographicVector> demographics;
};

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  ds.trajectories = read_trajectories_csv(dir / "trajectories.csv");
  const DemographicSchema schema = load_schema(dir / "schema.json");
  std::map<std::string, DemographicVector> by_id;
  for (const auto& rec : read_demographics_csv(dir / "demographics.csv")) {
    by_id[rec.traj_id] = encode_demographics(rec.fields, schema);
  }
  for (const auto& t : ds.trajectories) {
    const auto it = by_id.find(t.id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingField, "no demographics for trajectory " + t.id);
    ds.demographics.push_back(it->second);
  }
  if (ds.trajectories.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no trajectories");
  return ds;
}

std::vector<ModelKind> selected_kinds(const std::string& model) {
  if (model == "all") return {kAllModelKinds.begin(), kAllModelKinds.end()};
  return {parse_model_kind(model)};
}

fs::path checkpoint_path(const fs::path& out, ModelKind kind) {
  return out / ("checkpoint_" + std::string(to_string(kind)) + ".json");
}

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(1) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

void cmd_synth(const Settings& s, std::ostream& out) {
  const fs::path dir(s.data_dir);
  fs::create_directories(dir);
  const SyntheticDataset ds = generate_synthetic_dataset(s.seed, s.n_traj);
  write_trajectories_csv(ds.trajectories, dir / "trajectories.csv");
  write_demographics_csv(ds.records, ds.schema, dir / "demographics.csv");
  save_schema(ds.schema, dir / "schema.json");
  std::size_t samples = 0;
  for (const auto& t : ds.trajectories) samples += t.samples.size();
  out << "wrote " << ds.trajectories.size() << " trajectories (" << samples << " samples) to " << dir.string()
      << "\n";
}

void cmd_graph(const Settings& s, std::ostream& out) {
  const Dataset ds = load_dataset(s.data_dir);
  const ExperimentConfig cfg = experiment_config(s);
  const PreparedData data = prepare_experiment(ds.trajectories, ds.demographics, cfg);
  const fs::path dir(s.out_dir);
  fs::create_directories(dir);
  write_json(dir / "density.json", density_to_json(data.grid, &data.labels));
  write_json(dir / "graph.json", graph_to_json(data.graph));
  save_spectrum(data.spectrum, dir / "spectrum.bin");
  write_text_file(dir / "segmentation.svg", render_segmentation_svg(data.grid, data.labels, data.graph));
  write_text_file(dir / "segmentation.csv", segmentation_csv(data.grid, data.labels));
  std::string split = "traj_id,split\n";
  for (std::size_t i : data.train_index) split += data.trajectories[i].id + ",train\n";
  for (std::size_t i : data.validation_index) split += data.trajectories[i].id + ",validation\n";
  write_text_file(dir / "split.csv", split);
  out << "grid " << data.grid.rows() << "x" << data.grid.cols() << ", " << data.labels.node_count() << " nodes, "
      << data.graph.edges.size() << " edges, eigenvalues in [" << format_sig(data.spectrum.eigenvalues.front()) << ", "
      << format_sig(data.spectrum.eigenvalues.back()) << "]\n";
}

void cmd_train(const Settings& s, std::ostream& out) {
  const Dataset ds = load_dataset(s.data_dir);
  const ExperimentConfig cfg = experiment_config(s);
  const PreparedData data = prepare_experiment(ds.trajectories, ds.demographics, cfg);
  const InputNormalization norm = fit_normalization(data);
  const SampleSet train = build_samples(data, data.train_index, norm);
  const SampleSet val = build_samples(data, data.validation_index, norm);
  const fs::path dir(s.out_dir);
  fs::create_directories(dir);
  write_json(dir / "experiment.json", experiment_to_json(cfg));

  std::vector<std::pair<std::string, std::vector<EpochRecord>>> histories;
  for (ModelKind kind : selected_kinds(s.model)) {
    const auto start = std::chrono::steady_clock::now();
    const TrainResult r = train_model(kind, data.model_config, norm, train, val, data.spectrum, cfg.train);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_checkpoint(r.best, checkpoint_path(dir, kind));
    histories.emplace_back(std::string(to_string(kind)), r.history);
    out << to_string(kind) << ": best epoch " << r.best_epoch << ", val loss "
        << format_sig(r.history[r.best_epoch].val_loss) << " (" << format_sig(secs, 3) << " s)\n";
  }
  write_history_csv(histories, dir / "history.csv");
}

struct Restored {
  ExperimentConfig cfg;
  PreparedData data;
};

Restored restore(const Settings& s) {
  const fs::path dir(s.out_dir);
  Restored r;
  r.cfg = experiment_from_json(read_json(dir / "experiment.json"));
  const Dataset ds = load_dataset(s.data_dir);
  r.data = prepare_experiment(ds.trajectories, ds.demographics, r.cfg);
  return r;
}

ModelParams load_matching_checkpoint(const fs::path& path, const PreparedData& data) {
  ModelParams m = load_checkpoint(path);
  if (m.config.node_count != data.model_config.node_count) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + " was trained on a different graph");
  }
  return m;
}

void cmd_eval(const Settings& s, std::ostream& out) {
  const Restored r = restore(s);
  const fs::path dir(s.out_dir);
  std::vector<ModelEvaluation> evals;
  for (ModelKind kind : selected_kinds(s.model)) {
    const fs::path path = checkpoint_path(dir, kind);
    if (s.model == "all" && !fs::exists(path)) continue;
    const ModelParams m = load_matching_checkpoint(path, r.data);
    const SampleSet val = build_samples(r.data, r.data.validation_index, m.normalization);
    evals.push_back({std::string(to_string(kind)), val.ids, evaluate(m, val, r.data.spectrum)});
  }
  if (evals.empty()) throw Error(ErrorCode::EmptyInput, "no checkpoints found in " + dir.string());
  const EvalReport report = compare_models(evals);
  write_summary_csv(report, dir / "summary.csv");
  write_correlations_csv(report, dir / "correlations.csv");
  write_histograms_csv(report, dir / "histograms.csv");
  write_losses_csv(evals, dir / "losses.csv");
  for (const auto& m : report.models) {
    out << m.name << ": mean " << format_sig(m.mean) << " [" << format_sig(m.ci_low) << ", " << format_sig(m.ci_high)
        << "]\n";
  }
}

void cmd_explain(const Settings& s, std::ostream& out) {
  const Restored r = restore(s);
  const std::string model_name = s.model == "all" ? "compsnn" : s.model;
  const ModelKind kind = parse_model_kind(model_name);
  const fs::path dir(s.out_dir);
  const ModelParams m = load_matching_checkpoint(checkpoint_path(dir, kind), r.data);

  std::size_t index = r.data.validation_index.front();
  if (!s.traj_id.empty()) {
    const auto& trajs = r.data.trajectories;
    const auto it = std::find_if(trajs.begin(), trajs.end(), [&](const RawTrajectory& t) { return t.id == s.traj_id; });
    if (it == trajs.end()) throw Error(ErrorCode::InvalidArgument, "unknown trajectory id '" + s.traj_id + "'");
    index = static_cast<std::size_t>(it - trajs.begin());
  }
  const RawTrajectory& raw = r.data.trajectories[index];

  std::vector<ActivationSelector> selectors{{ActivationKind::attention, 0}};
  std::vector<std::size_t> channels;
  if (s.channel == "all") {
    for (std::size_t c = 0; c < m.config.cnn_channels; ++c) channels.push_back(c);
  } else {
    channels.push_back(parse_activation_selector("feature_" + s.channel).channel);
  }
  for (std::size_t c : channels) {
    selectors.push_back({ActivationKind::feature, c});
    selectors.push_back({ActivationKind::a_x_f, c});
  }
  const fs::path explain_dir = dir / "explain";
  fs::create_directories(explain_dir);
  for (const auto& sel : selectors) {
    const ActivationMap map = export_activation_map(m, r.data.features[index], raw, sel);
    const std::string stem = raw.id + "_" + model_name + "_" + sel.label();
    write_text_file(explain_dir / (stem + ".svg"), render_svg(map, r.data.grid));
    write_text_file(explain_dir / (stem + ".csv"), activation_map_csv(map));
  }
  out << "wrote " << selectors.size() << " activation maps for " << raw.id << " to " << explain_dir.string() << "\n";
}

int cmd_gradcheck(const Settings& s, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const GradCheckReport report = run_gradcheck_suite(s.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& e : report.entries) {
    out << e.name << ": max relative error " << format_sig(e.result.max_error, 3) << " over "
        << e.result.coordinates << " coordinates\n";
  }
  out << "max relative error " << format_sig(report.max_error(), 3) << " (tolerance " << format_sig(kGradTolerance)
      << ", " << format_sig(secs, 3) << " s)\n";
  return report.passed(kGradTolerance) ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"CompSNN trajectory analyser"};
  app.name("compsnn");
  app.require_subcommand(1);

  const auto common = [&s](CLI::App* sub) {
    sub->add_option("--config", s.config_file, "JSON file with default values for any flag");
    sub->add_option("--seed", s.seed, "Random seed");
  };
  const auto data_flag = [&s](CLI::App* sub) { sub->add_option("--data-dir", s.data_dir, "Dataset directory"); };
  const auto out_flag = [&s](CLI::App* sub) { sub->add_option("--out-dir", s.out_dir, "Output directory"); };
  const auto model_flags = [&s](CLI::App* sub) {
    sub->add_option("--cell-size", s.cell_size, "Grid cell size in map units (0 = automatic)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--epochs", s.epochs, "Training epochs");
    sub->add_option("--lr", s.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
    sub->add_option("--batch", s.batch, "Batch size")->check(CLI::PositiveNumber);
    sub->add_option("--filters", s.filters, "Number of spectral filters")->check(CLI::PositiveNumber);
    sub->add_option("--degree", s.degree, "Polynomial degree of the spectral filters");
  };
  const auto model_choice = [&s](CLI::App* sub) {
    sub->add_option("--model", s.model, "Model kind")
        ->check(CLI::IsMember({"all", "compsnn", "cnn", "gcnn", "mlp", "single_cnn", "single_gcnn", "single_mlp"}));
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  common(synth);
  data_flag(synth);
  synth->add_option("--n-traj", s.n_traj, "Number of trajectories")->check(CLI::Range(2, 1000000));

  CLI::App* graph = app.add_subcommand("graph", "Density grid, watershed segmentation and graph");
  common(graph);
  data_flag(graph);
  out_flag(graph);
  model_flags(graph);

  CLI::App* train = app.add_subcommand("train", "Train models and write checkpoints");
  common(train);
  data_flag(train);
  out_flag(train);
  model_flags(train);
  model_choice(train);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate checkpoints on the validation split");
  common(eval);
  data_flag(eval);
  out_flag(eval);
  model_choice(eval);

  CLI::App* explain = app.add_subcommand("explain", "Export CNN activation maps");
  common(explain);
  data_flag(explain);
  out_flag(explain);
  model_choice(explain);
  explain->add_option("--traj-id", s.traj_id, "Trajectory to explain (default: first validation trajectory)");
  explain->add_option("--channel", s.channel, "Feature channel index or 'all'");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  common(gradcheck);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n" << "run 'compsnn --help' for usage\n";
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config_file(*sub, s);
    if (sub == synth) cmd_synth(s, out);
    if (sub == graph) cmd_graph(s, out);
    if (sub == train) cmd_train(s, out);
    if (sub == eval) cmd_eval(s, out);
    if (sub == explain) cmd_explain(s, out);
    if (sub == gradcheck) return cmd_gradcheck(s, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace compsnn::cli
