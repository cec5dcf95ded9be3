#include "causal/service.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "causal/dsl.hpp"
#include "causal/report.hpp"

namespace causal
{

std::string content_hash(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

bool valid_model_name(std::string_view name)
{
  return !name.empty() && name.size() <= 128 && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

bool is_loopback(std::string_view host)
{
  return host == "127.0.0.1" || host == "localhost" || host == "::1";
}

// ============================================================================
// ModelStore
// ============================================================================

ModelStore::ModelStore(std::filesystem::path dir) : dir_(std::move(dir))
{
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ModelStore::file(const std::string & name) const
{
  return dir_ / (name + ".cdag");
}

std::shared_mutex & ModelStore::lock_for(const std::string & name) const
{
  std::lock_guard guard(locks_mutex_);
  auto & slot = locks_[name];
  if (!slot) slot = std::make_unique<std::shared_mutex>();
  return *slot;
}

std::vector<std::string> ModelStore::names() const
{
  std::vector<std::string> out;
  for (const auto & entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".cdag") continue;
    const std::string stem = entry.path().stem().string();
    if (valid_model_name(stem)) out.push_back(stem);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<ModelStore::Snapshot> ModelStore::load(const std::string & name) const
{
  if (!valid_model_name(name)) return std::nullopt;
  std::string text;
  {
    std::shared_lock lock(lock_for(name));
    std::ifstream in(file(name), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  Snapshot s{parse_model_any(text), text, content_hash(text)};
  return s;
}

ModelStore::PutResult ModelStore::put(const std::string & name, const ModelDocument & doc,
                                      const std::optional<std::string> & expected)
{
  if (!valid_model_name(name)) throw std::invalid_argument("invalid model name '" + name + "'");
  const std::string text = serialize(doc, Format::dsl);
  std::unique_lock lock(lock_for(name));

  const auto path = file(name);
  std::optional<std::string> current;
  if (std::ifstream in(path, std::ios::binary); in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    current = content_hash(buf.str());
  }
  if (current != expected) return {PutStatus::conflict, current.value_or("")};

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
  return {current ? PutStatus::replaced : PutStatus::created, content_hash(text)};
}

// ============================================================================
// Routes
// ============================================================================

namespace
{

constexpr const char * json_type = "application/json";

void send(httplib::Response & res, int status, const Json & body)
{
  res.status = status;
  res.set_content(render(body), json_type);
}

void send_error(httplib::Response & res, int status, const std::string & message, Json extra = Json::object())
{
  Json body;
  body["error"] = message;
  for (auto & [k, v] : extra.items()) body[k] = v;
  send(res, status, body);
}

void set_etag(httplib::Response & res, const std::string & hash)
{
  res.set_header("ETag", "\"" + hash + "\"");
}

std::optional<std::string> if_match(const httplib::Request & req)
{
  if (!req.has_header("If-Match")) return std::nullopt;
  std::string v = req.get_header_value("If-Match");
  if (v.rfind("W/", 0) == 0) v.erase(0, 2);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

nlohmann::json body_object(const httplib::Request & req, std::initializer_list<std::string_view> allowed)
{
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
  nlohmann::json j = nlohmann::json::parse(req.body);
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  for (const auto & [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw std::invalid_argument("unknown request field '" + k + "'");
    }
  }
  return j;
}

NodeSet name_set(const nlohmann::json & j, const char * field)
{
  NodeSet out;
  if (!j.contains(field)) return out;
  for (const auto & v : j.at(field)) out.insert(v.get<std::string>());
  return out;
}

AnalysisOptions options_from(const nlohmann::json & j)
{
  AnalysisOptions o;
  if (j.contains("exposure")) o.exposure = j.at("exposure").get<std::string>();
  if (j.contains("outcome")) o.outcome = j.at("outcome").get<std::string>();
  if (j.contains("scope")) o.scope = name_set(j, "scope");
  if (j.contains("max_given")) o.max_given = j.at("max_given").get<std::size_t>();
  if (j.contains("stratified_monitors")) o.stratified_monitors = j.at("stratified_monitors").get<bool>();
  return o;
}

/// Runs `fn` against a snapshot of the named model, mapping failures onto
/// status codes.
template <typename Fn>
void with_model(ModelStore & store, const httplib::Request & req, httplib::Response & res, Fn && fn)
{
  const std::string name = req.matches[1];
  try {
    if (!valid_model_name(name)) return send_error(res, 400, "invalid model name '" + name + "'");
    const auto snapshot = store.load(name);
    if (!snapshot) return send_error(res, 404, "unknown model '" + name + "'");
    set_etag(res, snapshot->hash);
    fn(*snapshot);
  } catch (const ModelError & e) {
    Json diagnostics = Json::array({to_json(e)});
    send_error(res, 400, "invalid model", {{"diagnostics", diagnostics}});
  } catch (const CycleError & e) {
    send_error(res, 400, e.what(), {{"cycle", e.witness()}});
  } catch (const UnknownNodeError & e) {
    send_error(res, 400, e.what(), {{"subject", e.name()}});
  } catch (const nlohmann::json::exception & e) {
    send_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const std::invalid_argument & e) {
    send_error(res, 400, e.what());
  } catch (const GraphError & e) {
    send_error(res, 400, e.what());
  } catch (const PathOverflowError & e) {
    send_error(res, 400, e.what());
  } catch (const std::exception & e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

void register_routes(httplib::Server & server, ModelStore & store)
{
  const std::string model = R"(/models/([^/]+))";

  server.Get("/models", [&store](const httplib::Request &, httplib::Response & res) {
    Json list = Json::array();
    for (const auto & name : store.names()) {
      Json entry;
      entry["name"] = name;
      try {
        auto s = store.load(name);
        entry["hash"] = s ? Json(s->hash) : Json(nullptr);
      } catch (const std::exception & e) {
        entry["hash"] = nullptr;
        entry["error"] = e.what();
      }
      list.push_back(std::move(entry));
    }
    send(res, 200, Json{{"models", std::move(list)}});
  });

  server.Get(model, [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      if (req.get_param_value("format") == "dsl") {
        res.status = 200;
        res.set_content(s.text, "text/plain; charset=utf-8");
        return;
      }
      Json body;
      body["name"] = req.matches[1].str();
      body["hash"] = s.hash;
      body["model"] = Json::parse(to_json(s.doc).dump());
      send(res, 200, body);
    });
  });

  server.Put(model, [&store](const httplib::Request & req, httplib::Response & res) {
    const std::string name = req.matches[1];
    if (!valid_model_name(name)) return send_error(res, 400, "invalid model name '" + name + "'");
    ModelDocument doc;
    try {
      doc = parse_model_any(req.body);
      CausalDag::build(doc);
    } catch (const ModelError & e) {
      return send_error(res, 400, "invalid model", {{"diagnostics", Json::array({to_json(e)})}});
    } catch (const CycleError & e) {
      Json d;
      d["message"] = e.what();
      d["line"] = 0;
      d["column"] = 0;
      return send_error(res, 400, "invalid model", {{"diagnostics", Json::array({d})}, {"cycle", e.witness()}});
    } catch (const GraphError & e) {
      Json d;
      d["message"] = e.what();
      d["line"] = 0;
      d["column"] = 0;
      return send_error(res, 400, "invalid model", {{"diagnostics", Json::array({d})}});
    }
    try {
      const auto result = store.put(name, doc, if_match(req));
      if (result.status == ModelStore::PutStatus::conflict) {
        if (!result.hash.empty()) set_etag(res, result.hash);
        return send_error(res, 409, "stale model hash", {{"hash", result.hash.empty() ? Json(nullptr) : Json(result.hash)}});
      }
      set_etag(res, result.hash);
      Json body;
      body["name"] = name;
      body["hash"] = result.hash;
      body["created"] = result.status == ModelStore::PutStatus::created;
      send(res, result.status == ModelStore::PutStatus::created ? 201 : 200, body);
    } catch (const std::exception & e) {
      send_error(res, 500, e.what());
    }
  });

  server.Post(model + "/analyze", [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      const auto j = body_object(req, {"exposure", "outcome", "scope", "max_given", "stratified_monitors"});
      send(res, 200, analysis_report(s.doc, options_from(j)));
    });
  });

  server.Post(model + "/dsep", [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      const auto j = body_object(req, {"x", "y", "given"});
      if (!j.contains("x") || !j.contains("y")) throw std::invalid_argument("dsep needs 'x' and 'y'");
      const CausalDag dag = CausalDag::build(s.doc);
      send(res, 200, separation_json(dag, {j.at("x").get<std::string>(), j.at("y").get<std::string>(), name_set(j, "given")}));
    });
  });

  server.Post(model + "/implications", [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      const auto j = body_object(req, {"scope", "max_given"});
      const CausalDag dag = CausalDag::build(s.doc);
      const AnalysisOptions o = options_from(j);
      send(res, 200, implications_json(s.doc, dag, resolve(dag, o).scope, o.max_given));
    });
  });

  server.Post(model + "/requirements", [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      const auto j = body_object(req, {"exposure", "outcome", "stratified_monitors"});
      const CausalDag dag = CausalDag::build(s.doc);
      send(res, 200, requirements_json(s.doc, dag, options_from(j)));
    });
  });

  server.Get(model + "/export", [&store](const httplib::Request & req, httplib::Response & res) {
    with_model(store, req, res, [&](const ModelStore::Snapshot & s) {
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
      if (format == "dot") {
        res.status = 200;
        res.set_content(to_dot(CausalDag::build(s.doc), s.doc.name), "text/vnd.graphviz");
      } else if (format == "json") {
        res.status = 200;
        res.set_content(serialize(s.doc, Format::json), json_type);
      } else if (format == "dsl") {
        res.status = 200;
        res.set_content(s.text, "text/plain; charset=utf-8");
      } else {
        send_error(res, 400, "unknown export format '" + format + "'");
      }
    });
  });
}

}  // namespace causal
