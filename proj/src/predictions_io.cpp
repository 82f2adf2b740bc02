#include "nbr/predictions_io.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "nbr/detail/io_util.hpp"
#include "nbr/errors.hpp"

using nlohmann::json;

namespace nbr {

namespace {

json header_to_json(const PredictionFileHeader& h) {
  return json{{"format", h.format},
              {"method", h.method},
              {"dataset", h.dataset},
              {"vocab_sha256", h.vocab_sha256},
              {"k", h.k}};
}

PredictionFileHeader header_from_json(const json& j) {
  PredictionFileHeader h;
  try {
    h.format = j.at("format").get<std::string>();
    h.method = j.at("method").get<std::string>();
    h.dataset = j.at("dataset").get<std::string>();
    h.vocab_sha256 = j.at("vocab_sha256").get<std::string>();
    h.k = j.at("k").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad prediction file header: ") + e.what());
  }
  if (h.format != "nbr-pred-v1") {
    throw FormatError("unsupported prediction file format '" + h.format + "'");
  }
  if (h.k < 1) {
    throw FormatError("prediction file header declares k < 1");
  }
  return h;
}

// Items may be canonical integer ids or original source keys.
ItemId resolve_item(const json& value, const Vocabulary& vocab, const std::string& user) {
  if (value.is_number_integer()) {
    const std::int64_t id = value.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      throw ValidationError(ValidationError::Code::unknown_item,
                            "item id " + std::to_string(id) + " outside vocabulary (user " +
                                user + ")");
    }
    return static_cast<ItemId>(id);
  }
  if (value.is_string()) {
    const std::string key = value.get<std::string>();
    if (const auto id = vocab.id(key)) return *id;
    throw ValidationError(ValidationError::Code::unknown_item,
                          "item key '" + key + "' not in vocabulary (user " + user + ")");
  }
  throw ValidationError(ValidationError::Code::bad_record,
                        "item must be an integer id or a string key (user " + user + ")");
}

}  // namespace

void write_predictions(const std::vector<RankedPrediction>& preds,
                       const PredictionFileHeader& header, const std::string& path) {
  std::vector<const RankedPrediction*> ordered;
  ordered.reserve(preds.size());
  for (const RankedPrediction& p : preds) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const RankedPrediction* a, const RankedPrediction* b) {
              if (a->user_id != b->user_id) return a->user_id < b->user_id;
              return a->target_index < b->target_index;
            });

  std::string content = header_to_json(header).dump();
  content.push_back('\n');
  for (const RankedPrediction* p : ordered) {
    json rec{{"user", p->user_id}, {"target", p->target_index}, {"items", p->items}};
    if (!p->scores.empty()) rec["scores"] = p->scores;
    content += rec.dump();
    content.push_back('\n');
  }
  ioutil::write_text_file_atomic(path, content);
}

PredictionFileHeader read_prediction_header(const std::string& path) {
  const auto lines = ioutil::read_lines(path);
  if (lines.empty()) throw FormatError("prediction file is empty: " + path);
  return header_from_json(ioutil::parse_json_line(lines[0], "prediction header"));
}

std::vector<RankedPrediction> read_and_validate(const std::string& path,
                                                const DatasetBundle& bundle,
                                                const EvalCohort& cohort) {
  const auto lines = ioutil::read_lines(path);
  if (lines.empty()) throw FormatError("prediction file is empty: " + path);
  const PredictionFileHeader header =
      header_from_json(ioutil::parse_json_line(lines[0], "prediction header"));

  if (header.vocab_sha256 != bundle.vocab.sha256()) {
    throw ValidationError(
        ValidationError::Code::checksum_mismatch,
        "prediction file was built against a different dataset: vocabulary checksum " +
            header.vocab_sha256 + " does not match " + bundle.vocab.sha256());
  }

  std::set<std::pair<std::string, int>> cohort_keys;
  for (const EvalInstance& inst : cohort.instances) {
    cohort_keys.emplace(inst.history.user_id(), inst.target_index);
  }

  std::vector<RankedPrediction> preds;
  std::set<std::pair<std::string, int>> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const json rec = ioutil::parse_json_line(lines[li], "prediction record");
    RankedPrediction pred;
    try {
      pred.user_id = rec.at("user").get<std::string>();
      pred.target_index = rec.value("target", 0);
    } catch (const json::exception& e) {
      throw ValidationError(ValidationError::Code::bad_record,
                            std::string("bad prediction record: ") + e.what());
    }
    pred.capacity = header.k;

    if (!rec.contains("items") || !rec.at("items").is_array()) {
      throw ValidationError(ValidationError::Code::bad_record,
                            "record without an items array (user " + pred.user_id + ")");
    }
    std::set<ItemId> distinct;
    for (const auto& value : rec.at("items")) {
      const ItemId item = resolve_item(value, bundle.vocab, pred.user_id);
      if (!distinct.insert(item).second) {
        throw ValidationError(ValidationError::Code::duplicate_item,
                              "duplicate item " + std::to_string(item) +
                                  " in prediction for user " + pred.user_id);
      }
      pred.items.push_back(item);
    }
    if (static_cast<int>(pred.items.size()) > header.k) {
      throw ValidationError(ValidationError::Code::capacity_exceeded,
                            "prediction for user " + pred.user_id + " has " +
                                std::to_string(pred.items.size()) +
                                " items, capacity is " + std::to_string(header.k));
    }
    if (rec.contains("scores")) {
      if (!rec.at("scores").is_array() ||
          rec.at("scores").size() != pred.items.size()) {
        throw ValidationError(ValidationError::Code::bad_record,
                              "scores length differs from items (user " + pred.user_id +
                                  ")");
      }
      for (const auto& s : rec.at("scores")) {
        if (!s.is_number()) {
          throw ValidationError(ValidationError::Code::bad_record,
                                "non-numeric score (user " + pred.user_id + ")");
        }
        pred.scores.push_back(s.get<double>());
      }
      for (std::size_t i = 1; i < pred.scores.size(); ++i) {
        if (pred.scores[i] > pred.scores[i - 1]) {
          throw ValidationError(ValidationError::Code::bad_record,
                                "scores are not non-increasing (user " + pred.user_id +
                                    ")");
        }
      }
    }

    const std::pair<std::string, int> key{pred.user_id, pred.target_index};
    if (!cohort_keys.count(key)) {
      throw ValidationError(ValidationError::Code::unexpected_instance,
                            "prediction for unknown instance " + pred.user_id + "#" +
                                std::to_string(pred.target_index));
    }
    if (!seen.insert(key).second) {
      throw ValidationError(ValidationError::Code::bad_record,
                            "duplicate record for instance " + pred.user_id + "#" +
                                std::to_string(pred.target_index));
    }
    preds.push_back(std::move(pred));
  }

  if (seen.size() != cohort_keys.size()) {
    std::string missing;
    std::size_t missing_count = 0;
    for (const auto& key : cohort_keys) {
      if (!seen.count(key)) {
        if (missing_count < 10) {
          missing += (missing.empty() ? "" : ", ") + key.first + "#" +
                     std::to_string(key.second);
        }
        ++missing_count;
      }
    }
    throw ValidationError(ValidationError::Code::missing_instances,
                          std::to_string(missing_count) +
                              " cohort instances missing from file, first: " + missing);
  }
  return preds;
}

}  // namespace nbr
