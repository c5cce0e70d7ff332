#include "dhpm/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "dhpm/errors.hpp"

namespace dhpm {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "file formats assume little-endian");

namespace {

constexpr char kRecordMagic[8] = {'D', 'H', 'P', 'M', 'R', 'E', 'C', '1'};
constexpr const char* kCheckpointFormat = "dhpm-checkpoint-v1";

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
  return out;
}

json network_json(const NetworkParams& p) {
  json w = json::array();
  json b = json::array();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    w.push_back(std::vector<double>(p.weights[l].data(), p.weights[l].data() + p.weights[l].size()));
    b.push_back(std::vector<double>(p.biases[l].data(), p.biases[l].data() + p.biases[l].size()));
  }
  return {{"layer_sizes", p.layer_sizes}, {"weights", w}, {"biases", b}};
}

NetworkParams network_from_json(const json& j) {
  NetworkParams p = NetworkParams::zeros(j.at("layer_sizes").get<std::vector<Index>>());
  const auto& w = j.at("weights");
  const auto& b = j.at("biases");
  if (w.size() != p.weights.size() || b.size() != p.biases.size()) {
    throw ShapeError("checkpoint layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto wv = w[l].get<std::vector<double>>();
    const auto bv = b[l].get<std::vector<double>>();
    if (static_cast<Index>(wv.size()) != p.weights[l].size() ||
        static_cast<Index>(bv.size()) != p.biases[l].size()) {
      throw ShapeError("checkpoint layer " + std::to_string(l) + " has the wrong size");
    }
    std::copy(wv.begin(), wv.end(), p.weights[l].data());
    std::copy(bv.begin(), bv.end(), p.biases[l].data());
  }
  p.validate();
  return p;
}

std::string record_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rec_%05d.rec", id);
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json spec_json(const InputFunctionSpec& spec) {
  json j{{"kind", to_string(spec.kind)}, {"length", spec.length}};
  if (spec.kind == FunctionKind::Periodic) {
    j["coefficients"] = std::vector<double>(spec.coefficients.begin(), spec.coefficients.end());
  }
  return j;
}

InputFunctionSpec spec_from_json(const json& j) {
  InputFunctionSpec s;
  s.kind = function_kind_from_string(j.at("kind").get<std::string>());
  s.length = j.at("length").get<double>();
  if (s.kind == FunctionKind::Periodic) {
    const auto c = j.at("coefficients").get<std::vector<double>>();
    if (c.size() != s.coefficients.size()) {
      throw ValidationError("periodic input function needs exactly 5 coefficients");
    }
    std::copy(c.begin(), c.end(), s.coefficients.begin());
  }
  s.validate();
  return s;
}

void write_record(const fs::path& path, const DatasetRecord& r) {
  json idx = json::array();
  for (const auto& [i, j] : r.measurements.indices) idx.push_back({i, j});
  const json header{{"id", r.id},
                    {"L", r.length},
                    {"D", r.params.diffusion},
                    {"K", r.params.reaction},
                    {"function", spec_json(r.spec)},
                    {"seed", r.seed},
                    {"nx", r.field.grid.nx},
                    {"nt", r.field.grid.nt},
                    {"order", "x-major"},
                    {"measurements", idx}};
  const std::string text = header.dump();
  auto out = open_out(path, std::ios::binary);
  out.write(kRecordMagic, sizeof kRecordMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const SpaceTimeGrid& g = r.field.grid;
  std::vector<double> flat(static_cast<std::size_t>(g.size()));
  for (Eigen::Index i = 0; i < g.nx; ++i) {
    for (Eigen::Index j = 0; j < g.nt; ++j) flat[static_cast<std::size_t>(i * g.nt + j)] = r.field.values(i, j);
  }
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw NumericalError("failed writing " + path.string());
}

DatasetRecord read_record(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open record " + path.string());
  auto fail = [&](const std::string& why) -> DatasetRecord {
    throw ValidationError("record " + path.string() + ": " + why);
  };
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kRecordMagic, sizeof magic) != 0) return fail("bad magic");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (64u << 20)) return fail("bad header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) return fail("truncated header");

  DatasetRecord r;
  try {
    const json h = json::parse(text);
    r.id = h.at("id").get<int>();
    r.length = h.at("L").get<double>();
    r.params = {h.at("D").get<double>(), h.at("K").get<double>()};
    r.spec = spec_from_json(h.at("function"));
    r.seed = h.at("seed").get<std::uint64_t>();
    r.field.grid = SpaceTimeGrid::standard(r.length);
    if (h.at("nx").get<Eigen::Index>() != r.field.grid.nx ||
        h.at("nt").get<Eigen::Index>() != r.field.grid.nt || h.at("order") != "x-major") {
      return fail("unexpected grid shape or order");
    }
    for (const auto& p : h.at("measurements")) {
      r.measurements.indices.emplace_back(p.at(0).get<Eigen::Index>(), p.at(1).get<Eigen::Index>());
    }
  } catch (const json::exception& e) {
    return fail(std::string("malformed header: ") + e.what());
  }
  r.params.validate();
  if (r.spec.length != r.length) return fail("function length differs from L");

  const SpaceTimeGrid& g = r.field.grid;
  std::vector<double> flat(static_cast<std::size_t>(g.size()));
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!in) return fail("truncated field data");
  in.peek();
  if (!in.eof()) return fail("trailing bytes after field data");
  r.field.values.resize(g.nx, g.nt);
  for (Eigen::Index i = 0; i < g.nx; ++i) {
    for (Eigen::Index j = 0; j < g.nt; ++j) r.field.values(i, j) = flat[static_cast<std::size_t>(i * g.nt + j)];
  }
  if (!r.field.values.allFinite()) return fail("non-finite field values");
  if (!r.field.values.row(0).isZero(0.0) || !r.field.values.row(g.nx - 1).isZero(0.0)) {
    return fail("boundary rows are not zero");
  }
  for (Eigen::Index i = 0; i < g.nx; ++i) {
    if (r.field.values(i, 0) != eval_input_function(r.spec, g.x(i))) {
      return fail("initial column does not match the input function");
    }
  }
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  r.measurements.values.resize(static_cast<Eigen::Index>(r.measurements.indices.size()));
  for (std::size_t k = 0; k < r.measurements.indices.size(); ++k) {
    const auto [i, j] = r.measurements.indices[k];
    if (i < 0 || i >= g.nx || j < 0 || j >= g.nt) return fail("measurement index outside the grid");
    if (!seen.insert({i, j}).second) return fail("duplicate measurement index");
    r.measurements.values[static_cast<Eigen::Index>(k)] = r.field.values(i, j);
  }
  if (r.measurements.indices.empty()) return fail("no measurements");
  return r;
}

void write_dataset(const fs::path& dir, const TrainConfig& config,
                   const std::vector<DatasetRecord>& records) {
  fs::create_directories(dir);
  json entries = json::array();
  for (const auto& r : records) {
    const std::string name = record_name(r.id);
    write_record(dir / name, r);
    entries.push_back({{"id", r.id},
                       {"file", name},
                       {"function", spec_json(r.spec)},
                       {"D", r.params.diffusion},
                       {"K", r.params.reaction},
                       {"L", r.length},
                       {"seed", r.seed}});
  }
  write_json(dir / "manifest.json", json{{"format", "dhpm-dataset-v1"},
                                         {"scenario", to_string(config.scenario.tag)},
                                         {"config", to_json(config)},
                                         {"config_hash", config_hash(config)},
                                         {"seed", config.seed},
                                         {"records", entries}});
}

LoadedDataset read_dataset(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  LoadedDataset d;
  try {
    if (m.at("format") != "dhpm-dataset-v1") throw ValidationError("unknown dataset format");
    d.config = config_from_json(m.at("config"));
    if (m.at("config_hash").get<std::string>() != config_hash(d.config)) {
      throw ValidationError("dataset manifest hash does not match its config");
    }
    for (const auto& e : m.at("records")) {
      DatasetRecord r = read_record(dir / e.at("file").get<std::string>());
      if (r.id != e.at("id").get<int>()) throw ValidationError("record id differs from manifest");
      d.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed dataset manifest: " + std::string(e.what()));
  }
  if (static_cast<int>(d.records.size()) != d.config.record_count()) {
    throw ValidationError("dataset manifest lists a different number of records than its config");
  }
  return d;
}

json checkpoint_json(const TrainState& state, const TrainConfig& config) {
  state.model.validate();
  json j{{"format", kCheckpointFormat},
         {"scenario", to_string(state.model.scenario.tag)},
         {"config_hash", state.config_hash},
         {"config", to_json(config)},
         {"epochs_done", state.epochs_done},
         {"n_sol", network_json(state.model.n_sol)},
         {"n_hid", network_json(state.model.n_hid)}};
  if (state.adam.first_moment.size() > 0) {
    const auto& a = state.adam;
    j["adam"] = {{"step_count", a.step_count},
                 {"beta1", a.beta1},
                 {"beta2", a.beta2},
                 {"epsilon", a.epsilon},
                 {"first_moment", std::vector<double>(a.first_moment.data(),
                                                      a.first_moment.data() + a.first_moment.size())},
                 {"second_moment", std::vector<double>(a.second_moment.data(),
                                                       a.second_moment.data() + a.second_moment.size())}};
  }
  return j;
}

void save_checkpoint(const fs::path& path, const TrainState& state, const TrainConfig& config) {
  write_json(path, checkpoint_json(state, config));
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const json j = read_json(path);
  LoadedCheckpoint c;
  try {
    if (j.at("format") != kCheckpointFormat) throw ValidationError("unknown checkpoint format");
    c.config = config_from_json(j.at("config"));
    c.state.config_hash = j.at("config_hash").get<std::string>();
    c.state.epochs_done = j.at("epochs_done").get<int>();
    c.state.model.scenario.tag = scenario_from_string(j.at("scenario").get<std::string>());
    c.state.model.n_sol = network_from_json(j.at("n_sol"));
    c.state.model.n_hid = network_from_json(j.at("n_hid"));
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      AdamState s;
      s.step_count = a.at("step_count").get<std::int64_t>();
      s.beta1 = a.at("beta1").get<double>();
      s.beta2 = a.at("beta2").get<double>();
      s.epsilon = a.at("epsilon").get<double>();
      const auto m = a.at("first_moment").get<std::vector<double>>();
      const auto v = a.at("second_moment").get<std::vector<double>>();
      s.first_moment = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Index>(m.size()));
      s.second_moment = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
      c.state.adam = std::move(s);
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  c.state.model.validate();
  return c;
}

void write_log_csv(const fs::path& path, const TrainLog& log, bool append) {
  const bool header = !append || !fs::exists(path);
  auto out = open_out(path, append ? std::ios::app : std::ios::out);
  if (header) out << "step,epoch,batch,data_loss,equation_loss,total_loss\n";
  for (const auto& e : log.entries) {
    out << e.step << ',' << e.epoch << ',' << e.batch << ',' << format_double(e.loss.data_loss) << ','
        << format_double(e.loss.equation_loss) << ',' << format_double(e.loss.total) << '\n';
  }
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_field_csv(const fs::path& path, const SolutionField& field) {
  auto out = open_out(path);
  const auto& g = field.grid;
  out << "# L=" << format_double(g.length) << " nx=" << g.nx << " nt=" << g.nt
      << " rows=x cols=t t_end=" << format_double(g.end_time) << '\n';
  for (Eigen::Index i = 0; i < g.nx; ++i) {
    for (Eigen::Index j = 0; j < g.nt; ++j) out << (j ? "," : "") << format_double(field.values(i, j));
    out << '\n';
  }
}

void write_contour_csv(const fs::path& path, const SpaceTimeGrid& grid,
                       const Eigen::MatrixXd& values) {
  auto out = open_out(path);
  out << "x,t,value\n";
  for (Eigen::Index i = 0; i < grid.nx; ++i) {
    for (Eigen::Index j = 0; j < grid.nt; ++j) {
      out << format_double(grid.x(i)) << ',' << format_double(grid.t(j)) << ','
          << format_double(values(i, j)) << '\n';
    }
  }
}

void write_sweep_csv(const fs::path& path, const SweepTable& t) {
  auto out = open_out(path);
  out << "D,K,mean_error,extrapolated\n";
  for (std::size_t i = 0; i < t.d_values.size(); ++i) {
    for (std::size_t j = 0; j < t.k_values.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      out << format_double(t.d_values[i]) << ',' << format_double(t.k_values[j]) << ','
          << format_double(t.mean_error(ii, jj)) << ',' << (t.extrapolated(ii, jj) ? 1 : 0) << '\n';
    }
  }
}

}  // namespace dhpm
