#include "nbr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nbr/detail/digest.hpp"
#include "nbr/detail/io_util.hpp"
#include "nbr/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nbr {

namespace {

// ---------------------------------------------------------------- CSV bits

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string normalize_col(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

int find_column(const std::vector<std::string>& header,
                const std::vector<std::string>& candidates) {
  for (const std::string& want : candidates) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (normalize_col(header[i]) == want) return static_cast<int>(i);
    }
  }
  return -1;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  const std::string t = trim(s);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------- dates

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Accepts YYYY-MM-DD (optionally with a time suffix), M/D/YYYY, and YYYYMMDD.
std::optional<std::int64_t> parse_day(const std::string& raw) {
  std::string s = trim(raw);
  if (const auto sp = s.find(' '); sp != std::string::npos) s = s.substr(0, sp);
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) == 3 ||
      std::sscanf(s.c_str(), "%u/%u/%d", &m, &d, &y) == 3) {
    // fallthrough to validation
  } else if (s.size() == 8 && std::all_of(s.begin(), s.end(), [](char c) {
               return std::isdigit(static_cast<unsigned char>(c));
             })) {
    y = std::stoi(s.substr(0, 4));
    m = static_cast<unsigned>(std::stoi(s.substr(4, 2)));
    d = static_cast<unsigned>(std::stoi(s.substr(6, 2)));
  } else {
    return std::nullopt;
  }
  if (y < 1900 || y > 2200 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  return days_from_civil(y, m, d);
}

// ---------------------------------------------------------------- parsers

struct CsvReader {
  std::ifstream in;
  explicit CsvReader(const std::string& path) : in(path) {
    if (!in) throw IoError("cannot open source file: " + path);
  }
  bool next(std::string& line) {
    if (!std::getline(in, line)) {
      if (in.bad()) throw IoError("read failure on source file");
      return false;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
};

void parse_tafeng(const std::string& path, ParseResult& result) {
  CsvReader reader(path);
  std::string line;
  if (!reader.next(line)) return;  // empty file: empty stream
  const auto header = split_csv(line);
  const int date_col = find_column(header, {"transactiondt", "transactiondate", "date"});
  const int user_col = find_column(header, {"customerid", "customer", "userid", "user"});
  const int item_col = find_column(header, {"productid", "product", "itemid", "item"});
  if (date_col < 0 || user_col < 0 || item_col < 0) {
    throw FormatError("tafeng header missing date/customer/product columns: " + line);
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const int max_col = std::max({date_col, user_col, item_col});
    if (static_cast<int>(fields.size()) <= max_col) {
      ++result.dropped_rows;
      continue;
    }
    const std::string user = trim(fields[user_col]);
    const std::string item = trim(fields[item_col]);
    const auto day = parse_day(fields[date_col]);
    if (user.empty() || item.empty() || !day) {
      ++result.dropped_rows;
      continue;
    }
    // Same-day purchases form one basket.
    result.rows.push_back({user, std::to_string(*day), *day, item});
  }
}

void parse_dunnhumby(const std::string& path, ParseResult& result) {
  CsvReader reader(path);
  std::string line;
  if (!reader.next(line)) return;
  const auto header = split_csv(line);
  const int user_col = find_column(header, {"householdkey", "household", "userid", "user"});
  const int basket_col = find_column(header, {"basketid", "basket"});
  const int day_col = find_column(header, {"day"});
  const int item_col = find_column(header, {"productid", "product", "itemid", "item"});
  if (user_col < 0 || basket_col < 0 || day_col < 0 || item_col < 0) {
    throw FormatError("dunnhumby header missing household_key/BASKET_ID/DAY/PRODUCT_ID: " +
                      line);
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const int max_col = std::max({user_col, basket_col, day_col, item_col});
    if (static_cast<int>(fields.size()) <= max_col) {
      ++result.dropped_rows;
      continue;
    }
    const std::string user = trim(fields[user_col]);
    const std::string basket = trim(fields[basket_col]);
    const std::string item = trim(fields[item_col]);
    const auto day = parse_int(fields[day_col]);
    if (user.empty() || item.empty() || basket.empty() || !day) {
      ++result.dropped_rows;
      continue;
    }
    result.rows.push_back({user, basket, *day, item});
  }
}

void parse_instacart_joined(const std::string& path, ParseResult& result) {
  CsvReader reader(path);
  std::string line;
  if (!reader.next(line)) return;
  const auto header = split_csv(line);
  const int order_col = find_column(header, {"orderid", "order"});
  const int user_col = find_column(header, {"userid", "user"});
  const int number_col = find_column(header, {"ordernumber"});
  const int item_col = find_column(header, {"productid", "product", "itemid", "item"});
  if (order_col < 0 || user_col < 0 || number_col < 0 || item_col < 0) {
    throw FormatError("instacart header missing order_id/user_id/order_number/product_id: " +
                      line);
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const int max_col = std::max({order_col, user_col, number_col, item_col});
    if (static_cast<int>(fields.size()) <= max_col) {
      ++result.dropped_rows;
      continue;
    }
    const std::string user = trim(fields[user_col]);
    const std::string order = trim(fields[order_col]);
    const std::string item = trim(fields[item_col]);
    const auto number = parse_int(fields[number_col]);
    if (user.empty() || item.empty() || order.empty() || !number) {
      ++result.dropped_rows;
      continue;
    }
    result.rows.push_back({user, order, *number, item});
  }
}

void parse_instacart_dir(const std::string& dir, ParseResult& result) {
  struct OrderInfo {
    std::string user;
    std::int64_t number;
  };
  std::unordered_map<std::string, OrderInfo> orders;
  {
    CsvReader reader((fs::path(dir) / "orders.csv").string());
    std::string line;
    if (!reader.next(line)) throw FormatError("orders.csv is empty");
    const auto header = split_csv(line);
    const int order_col = find_column(header, {"orderid"});
    const int user_col = find_column(header, {"userid"});
    const int number_col = find_column(header, {"ordernumber"});
    if (order_col < 0 || user_col < 0 || number_col < 0) {
      throw FormatError("orders.csv header missing order_id/user_id/order_number");
    }
    while (reader.next(line)) {
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      const int max_col = std::max({order_col, user_col, number_col});
      if (static_cast<int>(fields.size()) <= max_col) {
        ++result.dropped_rows;
        continue;
      }
      const auto number = parse_int(fields[number_col]);
      const std::string user = trim(fields[user_col]);
      const std::string order = trim(fields[order_col]);
      if (user.empty() || order.empty() || !number) {
        ++result.dropped_rows;
        continue;
      }
      orders[order] = {user, *number};
    }
  }

  std::vector<std::string> product_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("order_products", 0) == 0 && entry.path().extension() == ".csv") {
      product_files.push_back(entry.path().string());
    }
  }
  std::sort(product_files.begin(), product_files.end());
  if (product_files.empty()) {
    throw IoError("no order_products*.csv found under " + dir);
  }
  for (const std::string& file : product_files) {
    CsvReader reader(file);
    std::string line;
    if (!reader.next(line)) continue;
    const auto header = split_csv(line);
    const int order_col = find_column(header, {"orderid"});
    const int item_col = find_column(header, {"productid"});
    if (order_col < 0 || item_col < 0) {
      throw FormatError("order_products header missing order_id/product_id in " + file);
    }
    while (reader.next(line)) {
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      const int max_col = std::max(order_col, item_col);
      if (static_cast<int>(fields.size()) <= max_col) {
        ++result.dropped_rows;
        continue;
      }
      const std::string order = trim(fields[order_col]);
      const std::string item = trim(fields[item_col]);
      auto it = orders.find(order);
      if (order.empty() || item.empty() || it == orders.end()) {
        ++result.dropped_rows;
        continue;
      }
      result.rows.push_back({it->second.user, order, it->second.number, item});
    }
  }
}

void parse_canonical_as_transactions(const std::string& path, ParseResult& result) {
  fs::path baskets = path;
  if (fs::is_directory(baskets)) baskets /= "baskets.jsonl";
  const auto lines = ioutil::read_lines(baskets.string());
  if (lines.empty()) return;
  const json header = ioutil::parse_json_line(lines[0], "canonical header");
  if (header.value("format", "") != "nbr-canonical-v1") {
    throw FormatError("not a canonical basket file: " + baskets.string());
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const json rec = ioutil::parse_json_line(lines[li], "canonical user record");
    const std::string user = rec.at("user").get<std::string>();
    const auto& user_baskets = rec.at("baskets");
    for (std::size_t b = 0; b < user_baskets.size(); ++b) {
      const std::int64_t ts = user_baskets[b].at("ts").get<std::int64_t>();
      char key[16];
      std::snprintf(key, sizeof(key), "%08zu", b);  // per-user ordinal, lexicographic
      for (const auto& item : user_baskets[b].at("items")) {
        result.rows.push_back({user, key, ts, std::to_string(item.get<std::int64_t>())});
      }
    }
  }
}

// ------------------------------------------------------- item ranking

struct ItemUsage {
  std::int64_t count = 0;
  std::int64_t first_time = std::numeric_limits<std::int64_t>::max();
};

// Deterministic, input-order-independent ranking: frequency desc, then
// earliest occurrence, then key.
std::vector<std::pair<std::string, ItemUsage>> rank_items(const RawUserMap& users) {
  std::map<std::string, ItemUsage> usage;
  for (const auto& [user, baskets] : users) {
    for (const RawBasket& basket : baskets) {
      for (const std::string& item : basket.item_keys) {
        ItemUsage& u = usage[item];
        ++u.count;
        u.first_time = std::min(u.first_time, basket.time_key);
      }
    }
  }
  std::vector<std::pair<std::string, ItemUsage>> ranked(usage.begin(), usage.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.first_time != b.second.first_time) {
      return a.second.first_time < b.second.first_time;
    }
    return a.first < b.first;
  });
  return ranked;
}

RawUserMap apply_user_bounds(const RawUserMap& users, const PreprocessConfig& cfg) {
  RawUserMap kept;
  for (const auto& [user, baskets] : users) {
    if (baskets.empty()) continue;
    if (cfg.filter_by_basket_size) {
      double total = 0;
      for (const RawBasket& b : baskets) total += static_cast<double>(b.item_keys.size());
      const double avg = total / static_cast<double>(baskets.size());
      if (avg < cfg.min_baskets_per_user || avg > cfg.max_baskets_per_user) continue;
    } else {
      const int n = static_cast<int>(baskets.size());
      if (n < cfg.min_baskets_per_user || n > cfg.max_baskets_per_user) continue;
    }
    kept.emplace(user, baskets);
  }
  return kept;
}

}  // namespace

// ---------------------------------------------------------------- schema API

SourceSchema parse_schema_name(const std::string& name) {
  if (name == "tafeng") return SourceSchema::tafeng;
  if (name == "dunnhumby") return SourceSchema::dunnhumby;
  if (name == "instacart") return SourceSchema::instacart;
  if (name == "canonical") return SourceSchema::canonical;
  throw ConfigError("unknown schema '" + name +
                    "' (expected tafeng, dunnhumby, instacart, or canonical)");
}

const char* schema_name(SourceSchema schema) {
  switch (schema) {
    case SourceSchema::tafeng: return "tafeng";
    case SourceSchema::dunnhumby: return "dunnhumby";
    case SourceSchema::instacart: return "instacart";
    case SourceSchema::canonical: return "canonical";
  }
  return "unknown";
}

ParseResult parse_source(const std::string& path, SourceSchema schema,
                         const ParseOptions& opts) {
  if (!fs::exists(path)) {
    throw IoError("source path does not exist: " + path);
  }
  ParseResult result;
  switch (schema) {
    case SourceSchema::tafeng:
      parse_tafeng(path, result);
      break;
    case SourceSchema::dunnhumby:
      parse_dunnhumby(path, result);
      break;
    case SourceSchema::instacart:
      if (fs::is_directory(path)) {
        parse_instacart_dir(path, result);
      } else {
        parse_instacart_joined(path, result);
      }
      break;
    case SourceSchema::canonical:
      parse_canonical_as_transactions(path, result);
      break;
  }
  if (opts.max_days && !result.rows.empty()) {
    std::int64_t min_time = result.rows.front().time_key;
    for (const RawTransaction& row : result.rows) {
      min_time = std::min(min_time, row.time_key);
    }
    const std::int64_t cutoff = min_time + *opts.max_days;
    std::erase_if(result.rows,
                  [cutoff](const RawTransaction& row) { return row.time_key >= cutoff; });
  }
  return result;
}

void PreprocessConfig::validate() const {
  if (min_baskets_per_user < 1 || max_baskets_per_user < min_baskets_per_user) {
    throw ConfigError("invalid basket bounds: min=" + std::to_string(min_baskets_per_user) +
                      " max=" + std::to_string(max_baskets_per_user));
  }
  if (!(interaction_coverage > 0.0 && interaction_coverage <= 1.0)) {
    throw ConfigError("interaction coverage must be in (0, 1]");
  }
  const double sum = split_fractions[0] + split_fractions[1] + split_fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1.0");
  }
  for (double f : split_fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be non-negative");
  }
}

RawUserMap build_baskets(const std::vector<RawTransaction>& rows) {
  // (user, basket) -> accumulated items; time is the earliest row of the basket.
  std::map<std::string, std::map<std::string, RawBasket>> grouped;
  for (const RawTransaction& row : rows) {
    RawBasket& basket = grouped[row.user_key][row.basket_key];
    if (basket.item_keys.empty()) {
      basket.basket_key = row.basket_key;
      basket.time_key = row.time_key;
    } else {
      basket.time_key = std::min(basket.time_key, row.time_key);
    }
    basket.item_keys.push_back(row.item_key);
  }
  RawUserMap out;
  for (auto& [user, baskets] : grouped) {
    std::vector<RawBasket> ordered;
    ordered.reserve(baskets.size());
    for (auto& [key, basket] : baskets) {
      std::sort(basket.item_keys.begin(), basket.item_keys.end());
      basket.item_keys.erase(std::unique(basket.item_keys.begin(), basket.item_keys.end()),
                             basket.item_keys.end());
      ordered.push_back(std::move(basket));
    }
    std::sort(ordered.begin(), ordered.end(), [](const RawBasket& a, const RawBasket& b) {
      if (a.time_key != b.time_key) return a.time_key < b.time_key;
      return a.basket_key < b.basket_key;
    });
    out.emplace(user, std::move(ordered));
  }
  return out;
}

RawUserMap filter_dataset(const RawUserMap& users, const PreprocessConfig& cfg) {
  cfg.validate();
  RawUserMap bounded = apply_user_bounds(users, cfg);

  // Rare-item removal: keep the smallest top-frequency prefix covering the
  // required share of interactions.
  const auto ranked = rank_items(bounded);
  std::int64_t total = 0;
  for (const auto& [key, usage] : ranked) total += usage.count;
  std::set<std::string> kept_items;
  {
    std::int64_t cum = 0;
    const double need = cfg.interaction_coverage * static_cast<double>(total);
    for (const auto& [key, usage] : ranked) {
      if (static_cast<double>(cum) >= need) break;
      kept_items.insert(key);
      cum += usage.count;
    }
  }

  RawUserMap pruned;
  for (const auto& [user, baskets] : bounded) {
    std::vector<RawBasket> kept_baskets;
    for (const RawBasket& basket : baskets) {
      RawBasket nb;
      nb.basket_key = basket.basket_key;
      nb.time_key = basket.time_key;
      for (const std::string& item : basket.item_keys) {
        if (kept_items.count(item)) nb.item_keys.push_back(item);
      }
      if (!nb.item_keys.empty()) kept_baskets.push_back(std::move(nb));
    }
    if (!kept_baskets.empty()) pruned.emplace(user, std::move(kept_baskets));
  }

  RawUserMap final_users = apply_user_bounds(pruned, cfg);
  if (final_users.empty()) {
    throw DataError("empty dataset: no users survive filtering");
  }
  return final_users;
}

Vocabulary Vocabulary::from_keys(std::vector<std::string> keys) {
  Vocabulary v;
  v.keys_ = std::move(keys);
  v.ids_.reserve(v.keys_.size());
  for (std::size_t i = 0; i < v.keys_.size(); ++i) {
    if (!v.ids_.emplace(v.keys_[i], static_cast<ItemId>(i)).second) {
      throw DataError("duplicate vocabulary key: " + v.keys_[i]);
    }
  }
  return v;
}

const std::string& Vocabulary::key(ItemId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= keys_.size()) {
    throw DataError("item id out of vocabulary range: " + std::to_string(id));
  }
  return keys_[static_cast<std::size_t>(id)];
}

std::optional<ItemId> Vocabulary::id(const std::string& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::sha256() const {
  std::string blob;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    blob += std::to_string(i);
    blob.push_back('\t');
    blob += keys_[i];
    blob.push_back('\n');
  }
  return sha256_hex(blob);
}

std::vector<Basket> UserSegments::all() const {
  std::vector<Basket> out;
  out.reserve(train.size() + val.size() + test.size());
  out.insert(out.end(), train.begin(), train.end());
  out.insert(out.end(), val.begin(), val.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

const UserSegments* DatasetBundle::find_user(const std::string& user_id) const {
  auto it = std::lower_bound(users.begin(), users.end(), user_id,
                             [](const UserSegments& u, const std::string& id) {
                               return u.user_id < id;
                             });
  if (it == users.end() || it->user_id != user_id) return nullptr;
  return &*it;
}

SplitCounts split_counts(int n_baskets, const std::array<double, 3>& fractions) {
  SplitCounts c;
  c.test = std::max(
      1, static_cast<int>(std::floor(fractions[2] * static_cast<double>(n_baskets) + 1e-9)));
  c.val = std::max(
      1, static_cast<int>(std::floor(fractions[1] * static_cast<double>(n_baskets) + 1e-9)));
  c.train = n_baskets - c.val - c.test;
  return c;
}

SplitOutcome split_per_user(const RawUserMap& users, const PreprocessConfig& cfg,
                            const std::string& dataset_name) {
  cfg.validate();
  if (users.empty()) {
    throw DataError("empty dataset: nothing to split");
  }
  const auto ranked = rank_items(users);
  std::vector<std::string> keys;
  keys.reserve(ranked.size());
  for (const auto& [key, usage] : ranked) keys.push_back(key);

  SplitOutcome out;
  out.bundle.name = dataset_name;
  out.bundle.vocab = Vocabulary::from_keys(std::move(keys));

  for (const auto& [user, raw_baskets] : users) {
    const SplitCounts counts = split_counts(static_cast<int>(raw_baskets.size()),
                                            cfg.split_fractions);
    if (counts.train < 1) {
      ++out.dropped_users;
      continue;
    }
    UserSegments seg;
    seg.user_id = user;
    for (std::size_t i = 0; i < raw_baskets.size(); ++i) {
      Basket basket;
      basket.ts = raw_baskets[i].time_key;
      std::vector<ItemId> ids;
      ids.reserve(raw_baskets[i].item_keys.size());
      for (const std::string& item : raw_baskets[i].item_keys) {
        ids.push_back(*out.bundle.vocab.id(item));
      }
      basket.items = make_item_set(std::move(ids));
      if (static_cast<int>(i) < counts.train) {
        seg.train.push_back(std::move(basket));
      } else if (static_cast<int>(i) < counts.train + counts.val) {
        seg.val.push_back(std::move(basket));
      } else {
        seg.test.push_back(std::move(basket));
      }
    }
    out.bundle.users.push_back(std::move(seg));
  }
  if (out.bundle.users.empty()) {
    throw DataError("empty dataset: every user was dropped by the split rule");
  }
  out.bundle.stats = compute_stats(out.bundle);
  return out;
}

DatasetStats compute_stats(const DatasetBundle& bundle) {
  if (bundle.users.empty()) {
    throw DataError("cannot compute stats for an empty bundle");
  }
  DatasetStats s;
  s.n_items = bundle.vocab.size();
  s.n_users = bundle.users.size();
  std::size_t basket_count = 0;
  std::size_t item_count = 0;
  for (const UserSegments& seg : bundle.users) {
    for (const std::vector<Basket>* part : {&seg.train, &seg.val, &seg.test}) {
      basket_count += part->size();
      for (const Basket& b : *part) item_count += b.items.size();
    }
  }
  s.avg_basket_size = static_cast<double>(item_count) / static_cast<double>(basket_count);
  s.avg_baskets_per_user =
      static_cast<double>(basket_count) / static_cast<double>(s.n_users);

  const EvalCohort cohort = build_eval_cohort(bundle, {});
  double ratio_sum = 0.0;
  for (const EvalInstance& inst : cohort.instances) {
    ratio_sum += static_cast<double>(inst.truth.repeat_part.size()) /
                 static_cast<double>(inst.truth.target.size());
  }
  s.repeat_ratio = ratio_sum / static_cast<double>(cohort.instances.size());
  s.explore_ratio = 1.0 - s.repeat_ratio;
  return s;
}

std::string stats_table(const DatasetStats& stats, const std::string& name) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %9s %9s %12s %14s %13s %14s\n", "dataset", "#items",
                "#users", "avg. size", "avg. baskets", "repeat ratio", "explore ratio");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-16s %9zu %9zu %12.2f %14.2f %13.3f %14.3f\n",
                name.c_str(), stats.n_items, stats.n_users, stats.avg_basket_size,
                stats.avg_baskets_per_user, stats.repeat_ratio, stats.explore_ratio);
  out += buf;
  return out;
}

EvalCohort build_eval_cohort(const DatasetBundle& bundle, const CohortOptions& opts) {
  EvalCohort cohort;
  for (const UserSegments& seg : bundle.users) {
    if (seg.test.empty()) continue;
    std::vector<Basket> prior = seg.train;
    if (opts.include_validation_history) {
      prior.insert(prior.end(), seg.val.begin(), seg.val.end());
    }
    const std::size_t n_targets =
        opts.target == TargetMode::first_test_basket ? 1 : seg.test.size();
    for (std::size_t j = 0; j < n_targets; ++j) {
      UserHistory history(seg.user_id, prior);
      GroundTruth truth = GroundTruth::from_target(seg.test[j].items, history.repeat_set());
      cohort.instances.push_back(
          {std::move(history), std::move(truth), static_cast<int>(j)});
      prior.push_back(seg.test[j]);
    }
  }
  if (cohort.instances.empty()) {
    throw DataError("cohort is empty: no test baskets available");
  }
  return cohort;
}

EvalCohort build_validation_cohort(const DatasetBundle& bundle) {
  EvalCohort cohort;
  for (const UserSegments& seg : bundle.users) {
    if (seg.val.empty()) continue;
    std::vector<Basket> prior = seg.train;
    for (std::size_t j = 0; j < seg.val.size(); ++j) {
      UserHistory history(seg.user_id, prior);
      GroundTruth truth = GroundTruth::from_target(seg.val[j].items, history.repeat_set());
      cohort.instances.push_back(
          {std::move(history), std::move(truth), static_cast<int>(j)});
      prior.push_back(seg.val[j]);
    }
  }
  if (cohort.instances.empty()) {
    throw DataError("validation cohort is empty");
  }
  return cohort;
}

// ---------------------------------------------------------------- canonical IO

namespace {

json basket_to_json(const Basket& b) {
  return json{{"ts", b.ts}, {"items", b.items}};
}

Basket basket_from_json(const json& j, std::size_t vocab_size) {
  Basket b;
  b.ts = j.at("ts").get<std::int64_t>();
  std::vector<ItemId> items;
  for (const auto& item : j.at("items")) {
    const std::int64_t id = item.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw FormatError("basket item id out of vocabulary range: " + std::to_string(id));
    }
    items.push_back(static_cast<ItemId>(id));
  }
  b.items = make_item_set(std::move(items));
  if (b.items.empty()) {
    throw FormatError("canonical basket with no items");
  }
  return b;
}

}  // namespace

void write_canonical(const DatasetBundle& bundle, const std::string& dir) {
  ioutil::ensure_directory(dir);
  const std::string digest = bundle.vocab.sha256();

  {
    std::string content;
    content += json{{"format", "nbr-vocab-v1"}, {"n_items", bundle.vocab.size()}}.dump();
    content.push_back('\n');
    for (std::size_t i = 0; i < bundle.vocab.size(); ++i) {
      content += json{{"id", i}, {"key", bundle.vocab.key(static_cast<ItemId>(i))}}.dump();
      content.push_back('\n');
    }
    ioutil::write_text_file_atomic((fs::path(dir) / "vocabulary.jsonl").string(), content);
  }
  {
    std::string content;
    content += json{{"format", "nbr-canonical-v1"},
                    {"dataset", bundle.name},
                    {"n_users", bundle.users.size()},
                    {"n_items", bundle.vocab.size()},
                    {"vocab_sha256", digest}}
                   .dump();
    content.push_back('\n');
    for (const UserSegments& seg : bundle.users) {
      json baskets = json::array();
      for (const Basket& b : seg.all()) baskets.push_back(basket_to_json(b));
      content += json{{"user", seg.user_id}, {"baskets", std::move(baskets)}}.dump();
      content.push_back('\n');
    }
    ioutil::write_text_file_atomic((fs::path(dir) / "baskets.jsonl").string(), content);
  }
  {
    std::string content;
    content += json{{"format", "nbr-split-v1"}, {"n_users", bundle.users.size()}}.dump();
    content.push_back('\n');
    for (const UserSegments& seg : bundle.users) {
      content += json{{"user", seg.user_id},
                      {"train", seg.train.size()},
                      {"val", seg.val.size()},
                      {"test", seg.test.size()}}
                     .dump();
      content.push_back('\n');
    }
    ioutil::write_text_file_atomic((fs::path(dir) / "splits.jsonl").string(), content);
  }
  {
    json stats{{"format", "nbr-stats-v1"},
               {"dataset", bundle.name},
               {"n_items", bundle.stats.n_items},
               {"n_users", bundle.stats.n_users},
               {"avg_basket_size", bundle.stats.avg_basket_size},
               {"avg_baskets_per_user", bundle.stats.avg_baskets_per_user},
               {"repeat_ratio", bundle.stats.repeat_ratio},
               {"explore_ratio", bundle.stats.explore_ratio}};
    ioutil::write_text_file_atomic((fs::path(dir) / "stats.json").string(),
                                   stats.dump(2) + "\n");
  }
}

DatasetBundle load_canonical(const std::string& dir) {
  DatasetBundle bundle;

  {
    const auto lines = ioutil::read_lines((fs::path(dir) / "vocabulary.jsonl").string());
    if (lines.empty()) throw FormatError("vocabulary.jsonl is empty");
    const json header = ioutil::parse_json_line(lines[0], "vocabulary header");
    if (header.value("format", "") != "nbr-vocab-v1") {
      throw FormatError("vocabulary.jsonl: unsupported format line");
    }
    const std::size_t n_items = header.at("n_items").get<std::size_t>();
    std::vector<std::string> keys(n_items);
    std::size_t seen = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const json rec = ioutil::parse_json_line(lines[li], "vocabulary record");
      const std::size_t id = rec.at("id").get<std::size_t>();
      if (id >= n_items) throw FormatError("vocabulary id out of range");
      keys[id] = rec.at("key").get<std::string>();
      ++seen;
    }
    if (seen != n_items) {
      throw FormatError("vocabulary.jsonl: expected " + std::to_string(n_items) +
                        " entries, found " + std::to_string(seen));
    }
    bundle.vocab = Vocabulary::from_keys(std::move(keys));
  }

  std::map<std::string, std::vector<Basket>> baskets_by_user;
  {
    const auto lines = ioutil::read_lines((fs::path(dir) / "baskets.jsonl").string());
    if (lines.empty()) throw FormatError("baskets.jsonl is empty");
    const json header = ioutil::parse_json_line(lines[0], "canonical header");
    if (header.value("format", "") != "nbr-canonical-v1") {
      throw FormatError("baskets.jsonl: unsupported format line");
    }
    if (header.at("vocab_sha256").get<std::string>() != bundle.vocab.sha256()) {
      throw FormatError("baskets.jsonl: vocabulary checksum mismatch");
    }
    bundle.name = header.value("dataset", "");
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const json rec = ioutil::parse_json_line(lines[li], "canonical user record");
      const std::string user = rec.at("user").get<std::string>();
      std::vector<Basket> baskets;
      for (const auto& bj : rec.at("baskets")) {
        baskets.push_back(basket_from_json(bj, bundle.vocab.size()));
      }
      if (!baskets_by_user.emplace(user, std::move(baskets)).second) {
        throw FormatError("baskets.jsonl: duplicate user " + user);
      }
    }
    if (baskets_by_user.size() != header.at("n_users").get<std::size_t>()) {
      throw FormatError("baskets.jsonl: user count does not match header");
    }
  }

  {
    const auto lines = ioutil::read_lines((fs::path(dir) / "splits.jsonl").string());
    if (lines.empty()) throw FormatError("splits.jsonl is empty");
    const json header = ioutil::parse_json_line(lines[0], "split header");
    if (header.value("format", "") != "nbr-split-v1") {
      throw FormatError("splits.jsonl: unsupported format line");
    }
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const json rec = ioutil::parse_json_line(lines[li], "split record");
      const std::string user = rec.at("user").get<std::string>();
      auto it = baskets_by_user.find(user);
      if (it == baskets_by_user.end()) {
        throw FormatError("splits.jsonl: unknown user " + user);
      }
      const std::size_t n_train = rec.at("train").get<std::size_t>();
      const std::size_t n_val = rec.at("val").get<std::size_t>();
      const std::size_t n_test = rec.at("test").get<std::size_t>();
      const std::vector<Basket>& all = it->second;
      if (n_train + n_val + n_test != all.size()) {
        throw FormatError("splits.jsonl: segment sizes do not cover user " + user);
      }
      UserSegments seg;
      seg.user_id = user;
      seg.train.assign(all.begin(), all.begin() + n_train);
      seg.val.assign(all.begin() + n_train, all.begin() + n_train + n_val);
      seg.test.assign(all.begin() + n_train + n_val, all.end());
      bundle.users.push_back(std::move(seg));
      baskets_by_user.erase(it);
    }
    if (!baskets_by_user.empty()) {
      throw FormatError("splits.jsonl: missing split for user " +
                        baskets_by_user.begin()->first);
    }
  }

  std::sort(bundle.users.begin(), bundle.users.end(),
            [](const UserSegments& a, const UserSegments& b) { return a.user_id < b.user_id; });
  bundle.stats = compute_stats(bundle);
  return bundle;
}

}  // namespace nbr
