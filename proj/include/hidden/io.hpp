#pragma once

// File formats.
//
// Datasets: JSON Lines.  The first line holds
//   {"meta": {"num_labels": L, "feature_dim": d}}
// and every following line one document
//   {"id": "...", "features": [...], "labels": [active ids]}.
// Hierarchies: text edge list, one "parent child" id pair per line, with an
// optional JSON name sidecar.  Checkpoints and metric reports: JSON.
// Sweep tables: RFC 4180 CSV.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hidden/dataset.hpp"
#include "hidden/synthdata.hpp"
#include "hidden/trainer.hpp"

namespace hidden {

inline constexpr const char* kCheckpointMagic = "HIDDEN-CKPT-1";

using json = nlohmann::json;

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

inline void write_dataset(const std::string& path, const Dataset& data) {
  data.validate();
  auto out = open_output(path);
  json meta{{"meta", {{"num_labels", data.label_count}, {"feature_dim", data.feature_dim}}}};
  out << meta.dump() << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    json doc;
    doc["id"] = data.ids[i];
    const auto f = data.features.row(i);
    doc["features"] = std::vector<double>(f.begin(), f.end());
    doc["labels"] = data.active_labels(i);
    out << doc.dump() << "\n";
  }
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

inline Dataset read_dataset(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + what);
  };

  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  lineno = 1;
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    fail(std::string("bad JSON: ") + e.what());
  }
  if (!meta.contains("meta") || !meta["meta"].contains("num_labels") ||
      !meta["meta"].contains("feature_dim"))
    fail("expected {\"meta\": {\"num_labels\", \"feature_dim\"}} header");
  Dataset data;
  data.label_count = meta["meta"]["num_labels"].get<std::size_t>();
  data.feature_dim = meta["meta"]["feature_dim"].get<std::size_t>();
  if (data.label_count == 0 || data.feature_dim == 0) fail("zero labels or feature dim");

  std::vector<double> feats;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> ids;
  std::size_t docs = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("bad JSON: ") + e.what());
    }
    if (!doc.contains("id") || !doc.contains("features") || !doc.contains("labels"))
      fail("document needs id, features and labels");
    ids.push_back(doc["id"].get<std::string>());
    const auto& f = doc["features"];
    if (!f.is_array() || f.size() != data.feature_dim)
      fail("feature row has " + std::to_string(f.size()) + " values, expected " +
           std::to_string(data.feature_dim));
    for (const auto& v : f) {
      if (!v.is_number()) fail("non-numeric feature value");
      feats.push_back(v.get<double>());
    }
    labels.resize(labels.size() + data.label_count, 0);
    auto row = labels.data() + docs * data.label_count;
    for (const auto& v : doc["labels"]) {
      if (!v.is_number_integer()) fail("non-integer label id");
      const long l = v.get<long>();
      if (l < 0 || static_cast<std::size_t>(l) >= data.label_count)
        fail("label id " + std::to_string(l) + " outside [0, " +
             std::to_string(data.label_count) + ")");
      row[l] = 1;
    }
    ++docs;
  }

  data.ids = std::move(ids);
  data.features = Mat(docs, data.feature_dim);
  data.features.a = std::move(feats);
  data.labels = LabelMatrix(docs, data.label_count);
  data.labels.a = std::move(labels);
  auto sorted = data.ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i] == sorted[i + 1])
      throw std::runtime_error(path + ": duplicate document id '" + sorted[i] + "'");
  }
  data.validate();
  return data;
}

inline void write_hierarchy(const std::string& path, const Hierarchy& h) {
  h.validate();
  auto out = open_output(path);
  for (const auto& [p, c] : h.edges) out << p << " " << c << "\n";
  if (!h.names.empty()) {
    auto side = open_output(path + ".names.json");
    side << json{{"names", h.names}}.dump() << "\n";
  }
}

inline Hierarchy read_hierarchy(const std::string& path, int label_count) {
  auto in = open_input(path);
  Hierarchy h;
  h.label_count = label_count;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    int p, c;
    if (!(ss >> p)) continue;  // blank line
    if (!(ss >> c))
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               ": expected 'parent child'");
    std::string extra;
    if (ss >> extra)
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               ": trailing content '" + extra + "'");
    h.edges.emplace_back(p, c);
  }
  h.validate();
  return h;
}

inline json config_to_json(const TrainConfig& c) {
  return json{{"variant", variant_name(c.variant)},
              {"lambda", c.lambda},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"doc_dropout", c.doc_dropout},
              {"label_dropout", c.label_dropout},
              {"embed_dim", c.embed_dim},
              {"validation_fraction", c.validation_fraction},
              {"theta_init_half_width", c.theta_init_half_width},
              {"hidden_dims", c.hidden_dims},
              {"ranking_schedule",
               c.ranking_schedule == RankingSchedule::every_batch ? "every_batch" : "first_batch"},
              {"stage1_steps_per_epoch", c.stage1_steps_per_epoch},
              {"theta_init", c.theta_init == ThetaInit::uniform ? "uniform" : "identity"},
              {"freeze_theta", c.freeze_theta},
              {"seed", c.seed}};
}

inline TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("doc_dropout")) c.doc_dropout = j["doc_dropout"].get<double>();
  if (j.contains("label_dropout")) c.label_dropout = j["label_dropout"].get<double>();
  if (j.contains("embed_dim")) c.embed_dim = j["embed_dim"].get<std::size_t>();
  if (j.contains("validation_fraction"))
    c.validation_fraction = j["validation_fraction"].get<double>();
  if (j.contains("theta_init_half_width"))
    c.theta_init_half_width = j["theta_init_half_width"].get<double>();
  if (j.contains("hidden_dims")) c.hidden_dims = j["hidden_dims"].get<std::vector<std::size_t>>();
  if (j.contains("ranking_schedule")) {
    const auto s = j["ranking_schedule"].get<std::string>();
    if (s == "every_batch") c.ranking_schedule = RankingSchedule::every_batch;
    else if (s == "first_batch") c.ranking_schedule = RankingSchedule::first_batch;
    else throw std::invalid_argument("unknown ranking_schedule '" + s + "'");
  }
  if (j.contains("stage1_steps_per_epoch"))
    c.stage1_steps_per_epoch = j["stage1_steps_per_epoch"].get<int>();
  if (j.contains("theta_init")) {
    const auto s = j["theta_init"].get<std::string>();
    if (s == "uniform") c.theta_init = ThetaInit::uniform;
    else if (s == "identity") c.theta_init = ThetaInit::identity;
    else throw std::invalid_argument("unknown theta_init '" + s + "'");
  }
  if (j.contains("freeze_theta")) c.freeze_theta = j["freeze_theta"].get<bool>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  return c;
}

inline void save_checkpoint(const std::string& path, const TrainedModel& model,
                            std::size_t feature_dim) {
  json j;
  j["magic"] = kCheckpointMagic;
  j["variant"] = variant_name(model.variant);
  j["config"] = config_to_json(model.config);
  j["feature_dim"] = feature_dim;
  json layers = json::array();
  for (const auto& l : model.encoder.layers) {
    layers.push_back({{"rows", l.w.rows}, {"cols", l.w.cols}, {"w", l.w.a}, {"b", l.b}});
  }
  j["encoder"] = {{"layers", layers}};
  j["theta"] = {{"dim", model.theta.dim},
                {"label_count", model.theta.label_count},
                {"values", model.theta.theta}};
  json hist = json::array();
  for (const auto& e : model.history) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_objective", e.train_objective},
                    {"val_micro_f1", e.val_micro_f1},
                    {"val_macro_f1", e.val_macro_f1}});
  }
  j["history"] = hist;
  j["stage1_objective"] = model.stage1_objective;
  j["best_epoch"] = model.best_epoch;
  auto out = open_output(path);
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

inline TrainedModel load_checkpoint(const std::string& path, std::size_t* feature_dim = nullptr) {
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": bad checkpoint JSON: " + e.what());
  }
  const std::string magic = j.value("magic", "");
  if (magic != kCheckpointMagic)
    throw std::runtime_error(path + ": checkpoint version mismatch: found '" + magic +
                             "', expected '" + kCheckpointMagic + "'");
  TrainedModel model;
  model.variant = parse_variant(j["variant"].get<std::string>());
  model.config = config_from_json(j["config"]);
  for (const auto& jl : j["encoder"]["layers"]) {
    EncoderLayer l;
    l.w = Mat(jl["rows"].get<std::size_t>(), jl["cols"].get<std::size_t>());
    l.w.a = jl["w"].get<std::vector<double>>();
    l.b = jl["b"].get<std::vector<double>>();
    if (l.w.a.size() != l.w.rows * l.w.cols || l.b.size() != l.w.rows)
      throw std::runtime_error(path + ": malformed encoder layer");
    model.encoder.layers.push_back(std::move(l));
  }
  model.encoder.validate();
  model.theta = LabelEmbeddings(j["theta"]["dim"].get<std::size_t>(),
                                j["theta"]["label_count"].get<std::size_t>());
  model.theta.theta = j["theta"]["values"].get<std::vector<double>>();
  if (model.theta.theta.size() != model.theta.dim * model.theta.label_count)
    throw std::runtime_error(path + ": malformed embeddings");
  for (const auto& je : j["history"]) {
    EpochStats e;
    e.epoch = je["epoch"].get<int>();
    e.train_objective = je["train_objective"].get<double>();
    e.val_micro_f1 = je["val_micro_f1"].get<double>();
    e.val_macro_f1 = je["val_macro_f1"].get<double>();
    model.history.push_back(e);
  }
  model.stage1_objective = j.value("stage1_objective", std::vector<double>{});
  model.best_epoch = j["best_epoch"].get<int>();
  if (feature_dim != nullptr) *feature_dim = j["feature_dim"].get<std::size_t>();
  return model;
}

// CSV with CRLF line ends; fields holding commas, quotes or newlines are
// quoted with doubled inner quotes.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline void write_csv(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << csv_escape(row[i]);
    }
    out << "\r\n";
  }
}

}  // namespace hidden
