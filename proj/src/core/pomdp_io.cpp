#include "mstep/core/pomdp_io.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mstep/core/errors.hpp"

namespace mstep {

using nlohmann::ordered_json;

std::string format_decimal(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf.data(), ptr);
}

double parse_decimal(const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("malformed decimal '" + text + "'");
  }
  return value;
}

namespace {

ordered_json decimals(std::span<const double> values) {
  ordered_json arr = ordered_json::array();
  for (double v : values) arr.push_back(format_decimal(v));
  return arr;
}

double read_decimal(const ordered_json& v) {
  if (v.is_string()) return parse_decimal(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw IoError("expected a decimal string");
}

void read_vector(const ordered_json& arr, std::span<double> out, const char* what) {
  if (!arr.is_array() || arr.size() != out.size()) {
    throw IoError(std::string("field '") + what + "' has the wrong shape");
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = read_decimal(arr[i]);
}

const ordered_json& field(const ordered_json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw IoError(std::string("missing field '") + key + "'");
  return *it;
}

int read_int(const ordered_json& doc, const char* key) {
  const auto& v = field(doc, key);
  if (!v.is_number_integer()) throw IoError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

ordered_json pomdp_to_json(const Pomdp& p) {
  ordered_json doc;
  doc["H"] = p.horizon;
  doc["m"] = p.memory;
  doc["S"] = p.state_count;
  doc["O"] = p.observation_count;
  doc["A"] = p.action_count;
  doc["init"] = decimals(p.initial);
  ordered_json tr = ordered_json::array();
  for (int h = 1; h < p.horizon; ++h) {
    ordered_json layer = ordered_json::array();
    for (int s = 0; s < p.state_count; ++s) {
      ordered_json row = ordered_json::array();
      for (int a = 0; a < p.action_count; ++a) row.push_back(decimals(p.transition(h, s, a)));
      layer.push_back(std::move(row));
    }
    tr.push_back(std::move(layer));
  }
  doc["transitions"] = std::move(tr);
  ordered_json em = ordered_json::array();
  for (int h = 1; h <= p.horizon; ++h) {
    ordered_json layer = ordered_json::array();
    for (int s = 0; s < p.state_count; ++s) layer.push_back(decimals(p.emission(h, s)));
    em.push_back(std::move(layer));
  }
  doc["emissions"] = std::move(em);
  ordered_json rw = ordered_json::array();
  for (int h = 1; h <= p.horizon; ++h) {
    rw.push_back(decimals(std::span<const double>(p.rewards).subspan(
        static_cast<std::size_t>(h - 1) * p.observation_count, p.observation_count)));
  }
  doc["rewards"] = std::move(rw);
  if (p.decoder) {
    const SuffixSpace space = p.suffix_space(p.decoder->memory);
    ordered_json dec;
    dec["m"] = p.decoder->memory;
    ordered_json steps = ordered_json::array();
    for (int h = 1; h <= static_cast<int>(p.decoder->states.size()); ++h) {
      ordered_json entries = ordered_json::array();
      for (const auto& [code, s] : p.decoder->states[h - 1]) {
        const Suffix z = space.decode(h, code);
        ordered_json flat = ordered_json::array();
        for (std::size_t i = 0; i < z.observations.size(); ++i) {
          if (i > 0) flat.push_back(z.actions[i - 1]);
          flat.push_back(z.observations[i]);
        }
        entries.push_back(ordered_json{{"z", std::move(flat)}, {"s", s}});
      }
      steps.push_back(std::move(entries));
    }
    dec["steps"] = std::move(steps);
    doc["decoder"] = std::move(dec);
  }
  return doc;
}

Pomdp pomdp_from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw IoError("POMDP document must be an object");
  for (const auto& [key, value] : doc.items()) {
    static const std::array<const char*, 10> known = {"H", "m", "S", "O", "A", "init",
                                                      "transitions", "emissions", "rewards",
                                                      "decoder"};
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) ==
        known.end()) {
      throw IoError("unknown POMDP field '" + key + "'");
    }
  }
  Pomdp p;
  try {
    p = Pomdp::shaped(read_int(doc, "H"), read_int(doc, "m"), read_int(doc, "S"),
                      read_int(doc, "O"), read_int(doc, "A"));
  } catch (const ModelError& e) {
    throw IoError(std::string("invalid POMDP header: ") + e.what());
  }
  read_vector(field(doc, "init"), p.initial, "init");
  const auto& tr = field(doc, "transitions");
  if (!tr.is_array() || static_cast<int>(tr.size()) != p.horizon - 1) {
    throw IoError("field 'transitions' has the wrong shape");
  }
  for (int h = 1; h < p.horizon; ++h) {
    const auto& layer = tr[h - 1];
    if (!layer.is_array() || static_cast<int>(layer.size()) != p.state_count) {
      throw IoError("field 'transitions' has the wrong shape");
    }
    for (int s = 0; s < p.state_count; ++s) {
      if (!layer[s].is_array() || static_cast<int>(layer[s].size()) != p.action_count) {
        throw IoError("field 'transitions' has the wrong shape");
      }
      for (int a = 0; a < p.action_count; ++a)
        read_vector(layer[s][a], p.transition(h, s, a), "transitions");
    }
  }
  const auto& em = field(doc, "emissions");
  if (!em.is_array() || static_cast<int>(em.size()) != p.horizon) {
    throw IoError("field 'emissions' has the wrong shape");
  }
  for (int h = 1; h <= p.horizon; ++h) {
    if (!em[h - 1].is_array() || static_cast<int>(em[h - 1].size()) != p.state_count) {
      throw IoError("field 'emissions' has the wrong shape");
    }
    for (int s = 0; s < p.state_count; ++s) read_vector(em[h - 1][s], p.emission(h, s), "emissions");
  }
  const auto& rw = field(doc, "rewards");
  if (!rw.is_array() || static_cast<int>(rw.size()) != p.horizon) {
    throw IoError("field 'rewards' has the wrong shape");
  }
  for (int h = 1; h <= p.horizon; ++h) {
    read_vector(rw[h - 1],
                std::span<double>(p.rewards).subspan(
                    static_cast<std::size_t>(h - 1) * p.observation_count, p.observation_count),
                "rewards");
  }
  if (auto it = doc.find("decoder"); it != doc.end() && !it->is_null()) {
    Decoder dec;
    dec.memory = read_int(*it, "m");
    const auto& steps = field(*it, "steps");
    if (!steps.is_array() || dec.memory < 1 || dec.memory > p.horizon) {
      throw IoError("malformed decoder");
    }
    const SuffixSpace space = p.suffix_space(dec.memory);
    int h = 0;
    for (const auto& entries : steps) {
      ++h;
      std::map<SuffixCode, int> layer;
      for (const auto& e : entries) {
        const auto& flat = field(e, "z");
        Suffix z;
        z.step = h;
        for (std::size_t i = 0; i < flat.size(); ++i) {
          (i % 2 == 0 ? z.observations : z.actions).push_back(flat[i].get<int>());
        }
        try {
          layer[space.encode(z)] = read_int(e, "s");
        } catch (const ModelError& err) {
          throw IoError(std::string("malformed decoder entry: ") + err.what());
        }
      }
      dec.states.push_back(std::move(layer));
    }
    p.decoder = std::move(dec);
  }
  try {
    p.validate();
  } catch (const ModelError& e) {
    throw IoError(std::string("invalid POMDP: ") + e.what());
  }
  return p;
}

std::string serialize_pomdp(const Pomdp& pomdp) { return pomdp_to_json(pomdp).dump(1) + "\n"; }

Pomdp parse_pomdp(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("POMDP file is not valid JSON: ") + e.what());
  }
  try {
    return pomdp_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed POMDP file: ") + e.what());
  }
}

void save_pomdp(const Pomdp& pomdp, const std::filesystem::path& path) {
  write_text_file(path, serialize_pomdp(pomdp));
}

Pomdp load_pomdp(const std::filesystem::path& path) { return parse_pomdp(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace mstep
