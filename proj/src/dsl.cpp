#include "causal/dsl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace causal
{

namespace
{

// ============================================================================
// Lexer
// ============================================================================

enum class Tok { ident, string, number, lbrace, rbrace, lbracket, rbracket, colon, comma, arrow, equals, end };

struct Token
{
  Tok kind;
  std::string text;
  SourcePosition pos;
};

const char * describe(Tok t)
{
  switch (t) {
    case Tok::ident:
      return "identifier";
    case Tok::string:
      return "string";
    case Tok::number:
      return "number";
    case Tok::lbrace:
      return "'{'";
    case Tok::rbrace:
      return "'}'";
    case Tok::lbracket:
      return "'['";
    case Tok::rbracket:
      return "']'";
    case Tok::colon:
      return "':'";
    case Tok::comma:
      return "','";
    case Tok::arrow:
      return "'->'";
    case Tok::equals:
      return "'='";
    case Tok::end:
      return "end of input";
  }
  return "token";
}

void append_utf8(std::string & out, unsigned cp)
{
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class Lexer
{
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run()
  {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      SourcePosition pos{line_, col_};
      if (at_end()) {
        out.push_back({Tok::end, {}, pos});
        return out;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back({Tok::ident, identifier(), pos});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
        if (c == '-' && peek(1) == '>') {
          advance();
          advance();
          out.push_back({Tok::arrow, "->", pos});
        } else {
          out.push_back({Tok::number, number(pos), pos});
        }
      } else if (c == '"') {
        out.push_back({Tok::string, string(pos), pos});
      } else {
        Tok kind;
        switch (c) {
          case '{':
            kind = Tok::lbrace;
            break;
          case '}':
            kind = Tok::rbrace;
            break;
          case '[':
            kind = Tok::lbracket;
            break;
          case ']':
            kind = Tok::rbracket;
            break;
          case ':':
            kind = Tok::colon;
            break;
          case ',':
            kind = Tok::comma;
            break;
          case '=':
            kind = Tok::equals;
            break;
          default:
            throw ModelError(std::string("unexpected character '") + c + "'", pos);
        }
        advance();
        out.push_back({kind, std::string(1, c), pos});
      }
    }
  }

private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0'; }

  void advance()
  {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_blank()
  {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && peek(1) == '/')) {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string identifier()
  {
    std::string out;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        out += c;
        advance();
      } else if (c == '-' && peek(1) != '>' &&
                 (std::isalnum(static_cast<unsigned char>(peek(1))) || peek(1) == '_')) {
        out += c;
        advance();
      } else {
        break;
      }
    }
    return out;
  }

  std::string number(SourcePosition pos)
  {
    std::string out;
    if (peek() == '-' || peek() == '+') {
      out += peek();
      advance();
    }
    bool digits = false;
    while (!at_end()) {
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        digits = digits || c != '.';
      } else if ((c == 'e' || c == 'E') && digits) {
        out += c;
        advance();
        if (peek() == '-' || peek() == '+') {
          out += peek();
          advance();
        }
        continue;
      } else {
        break;
      }
      out += c;
      advance();
    }
    if (!digits) throw ModelError("malformed number '" + out + "'", pos);
    return out;
  }

  std::string string(SourcePosition pos)
  {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (at_end()) throw ModelError("unterminated string", pos);
      char c = peek();
      if (c == '"') {
        advance();
        return out;
      }
      if (c == '\n') throw ModelError("newline in string literal", {line_, col_});
      if (c == '\\') {
        SourcePosition esc{line_, col_};
        advance();
        if (at_end()) throw ModelError("unterminated string", pos);
        char e = peek();
        advance();
        switch (e) {
          case '"':
            out += '"';
            break;
          case '\\':
            out += '\\';
            break;
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          case 'r':
            out += '\r';
            break;
          case 'u': {
            unsigned cp = 0;
            for (int k = 0; k < 4; ++k) {
              char h = peek();
              if (!std::isxdigit(static_cast<unsigned char>(h))) throw ModelError("bad \\u escape", esc);
              cp = cp * 16 + static_cast<unsigned>(std::isdigit(static_cast<unsigned char>(h))
                                                     ? h - '0'
                                                     : std::tolower(static_cast<unsigned char>(h)) - 'a' + 10);
              advance();
            }
            append_utf8(out, cp);
            break;
          }
          default:
            throw ModelError(std::string("unknown escape '\\") + e + "'", esc);
        }
        continue;
      }
      out += c;
      advance();
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// ============================================================================
// Attribute values
// ============================================================================

struct Value;
using ValueList = std::vector<Value>;
using ValueMap = std::vector<std::pair<Token, Value>>;

struct Value
{
  enum class Kind { ident, string, number, list, map } kind;
  Token token;  // scalar payload, or the opening bracket for aggregates
  std::shared_ptr<ValueList> list;
  std::shared_ptr<ValueMap> map;
};

// ============================================================================
// Parser
// ============================================================================

class Parser
{
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ModelDocument run()
  {
    expect_keyword("model");
    doc_.name = expect(Tok::string).text;
    expect(Tok::lbrace);
    while (peek().kind != Tok::rbrace) {
      if (peek().kind == Tok::end) error("missing '}' closing the model block", peek().pos);
      statement();
    }
    next();
    if (peek().kind != Tok::end) error("unexpected content after model block", peek().pos);
    validate_document(doc_, &sites_);
    return std::move(doc_);
  }

private:
  const Token & peek() const { return toks_[i_]; }
  const Token & next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  [[noreturn]] void error(const std::string & msg, SourcePosition pos, std::string subject = {}) const
  {
    throw ModelError(msg, pos, std::move(subject));
  }

  const Token & expect(Tok kind)
  {
    const Token & t = peek();
    if (t.kind != kind) {
      error(std::string("expected ") + describe(kind) + ", found " +
              (t.kind == Tok::end ? std::string("end of input") : "'" + t.text + "'"),
            t.pos);
    }
    return next();
  }

  void expect_keyword(std::string_view kw)
  {
    const Token & t = peek();
    if (t.kind != Tok::ident || t.text != kw) {
      error("expected '" + std::string(kw) + "'", t.pos);
    }
    next();
  }

  void site(const std::string & key, SourcePosition pos) { sites_.emplace(key, pos); }

  void statement()
  {
    const Token kw = expect(Tok::ident);
    if (kw.text == "assume") {
      const Token tag = expect(Tok::ident);
      std::string text = expect(Tok::string).text;
      site("assume:" + tag.text, tag.pos);
      doc_.assumptions.push_back({tag.text, std::move(text)});
    } else if (kw.text == "node") {
      node_statement();
    } else if (kw.text == "edge") {
      edge_statement(false);
    } else if (kw.text == "disturbance") {
      edge_statement(true);
    } else if (kw.text == "mechanism") {
      mechanism_statement();
    } else if (kw.text == "independence") {
      independence_statement();
    } else {
      error("unknown statement '" + kw.text + "'", kw.pos, kw.text);
    }
  }

  ValueMap optional_attributes()
  {
    if (peek().kind != Tok::lbrace) return {};
    Value v = value();
    return std::move(*v.map);
  }

  Value value()
  {
    const Token t = next();
    switch (t.kind) {
      case Tok::ident:
        return {Value::Kind::ident, t, nullptr, nullptr};
      case Tok::string:
        return {Value::Kind::string, t, nullptr, nullptr};
      case Tok::number:
        return {Value::Kind::number, t, nullptr, nullptr};
      case Tok::lbracket: {
        auto items = std::make_shared<ValueList>();
        while (peek().kind != Tok::rbracket) {
          items->push_back(value());
          if (peek().kind == Tok::comma) {
            next();
          } else if (peek().kind != Tok::rbracket) {
            error("expected ',' or ']' in list", peek().pos);
          }
        }
        next();
        return {Value::Kind::list, t, std::move(items), nullptr};
      }
      case Tok::lbrace: {
        auto entries = std::make_shared<ValueMap>();
        while (peek().kind != Tok::rbrace) {
          const Token key = expect(Tok::ident);
          for (const auto & [k, _] : *entries) {
            if (k.text == key.text) error("duplicate attribute '" + key.text + "'", key.pos, key.text);
          }
          expect(Tok::colon);
          entries->emplace_back(key, value());
          if (peek().kind == Tok::comma) next();
        }
        next();
        return {Value::Kind::map, t, nullptr, std::move(entries)};
      }
      default:
        error(std::string("expected a value, found ") + describe(t.kind), t.pos);
    }
  }

  std::string as_ident(const Value & v, const std::string & what)
  {
    if (v.kind != Value::Kind::ident) error(what + " must be an identifier", v.token.pos);
    return v.token.text;
  }

  std::string as_string(const Value & v, const std::string & what)
  {
    if (v.kind != Value::Kind::string) error(what + " must be a string", v.token.pos);
    return v.token.text;
  }

  double as_number(const Value & v, const std::string & what)
  {
    if (v.kind != Value::Kind::number) error(what + " must be a number", v.token.pos);
    const std::string & s = v.token.text;
    const char * b = s.data() + (s.front() == '+' ? 1 : 0);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(b, s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) {
      error("malformed number '" + s + "'", v.token.pos);
    }
    return out;
  }

  bool as_bool(const Value & v, const std::string & what)
  {
    if (v.kind == Value::Kind::ident && (v.token.text == "true" || v.token.text == "false")) {
      return v.token.text == "true";
    }
    error(what + " must be true or false", v.token.pos);
  }

  std::vector<std::string> as_ident_list(const Value & v, const std::string & what)
  {
    if (v.kind != Value::Kind::list) error(what + " must be a list", v.token.pos);
    std::vector<std::string> out;
    for (const auto & item : *v.list) out.push_back(as_ident(item, what + " entry"));
    return out;
  }

  std::vector<double> as_number_list(const Value & v, const std::string & what)
  {
    if (v.kind != Value::Kind::list) error(what + " must be a list", v.token.pos);
    std::vector<double> out;
    for (const auto & item : *v.list) out.push_back(as_number(item, what + " entry"));
    return out;
  }

  std::map<std::string, double> as_weights(const Value & v)
  {
    if (v.kind != Value::Kind::map) error("weights must be a map", v.token.pos);
    std::map<std::string, double> out;
    for (const auto & [k, w] : *v.map) out[k.text] = as_number(w, "weight of '" + k.text + "'");
    return out;
  }

  [[noreturn]] void unknown_attribute(const Token & key, std::string_view where)
  {
    error("unknown attribute '" + key.text + "' for " + std::string(where), key.pos, key.text);
  }

  void node_statement()
  {
    const Token name = expect(Tok::ident);
    site("node:" + name.text, name.pos);
    NodeDecl node;
    node.name = name.text;
    for (const auto & [key, v] : optional_attributes()) {
      if (key.text == "kind") {
        auto kind = parse_node_kind(as_ident(v, "kind"));
        if (!kind) error("kind must be observed or latent", v.token.pos, v.token.text);
        node.kind = *kind;
      } else if (key.text == "role") {
        auto role = parse_node_role(as_ident(v, "role"));
        if (!role) error("role must be exposure, outcome, covariate or disturbance", v.token.pos, v.token.text);
        node.role = *role;
      } else if (key.text == "traces") {
        node.traces = as_ident_list(v, "traces");
      } else if (key.text == "label") {
        node.label = as_string(v, "label");
      } else if (key.text == "controllable") {
        node.controllable = as_bool(v, "controllable");
      } else {
        unknown_attribute(key, "node");
      }
    }
    doc_.nodes.push_back(std::move(node));
  }

  void edge_statement(bool disturbance)
  {
    const Token from = expect(Tok::ident);
    expect(Tok::arrow);
    const Token to = expect(Tok::ident);
    site("edge:" + from.text + "->" + to.text, from.pos);
    EdgeDecl edge{from.text, to.text, {}, std::nullopt};
    NodeDecl source;
    if (disturbance) {
      source.name = from.text;
      source.kind = NodeKind::latent;
      source.role = NodeRole::disturbance;
      site("node:" + from.text, from.pos);
    }
    for (const auto & [key, v] : optional_attributes()) {
      if (key.text == "traces") {
        edge.traces = as_ident_list(v, "traces");
      } else if (key.text == "mechanism") {
        edge.mechanism_tag = as_string(v, "mechanism");
      } else if (disturbance && key.text == "label") {
        source.label = as_string(v, "label");
      } else {
        unknown_attribute(key, disturbance ? "disturbance" : "edge");
      }
    }
    if (disturbance) {
      source.traces = edge.traces;
      doc_.nodes.push_back(std::move(source));
    }
    doc_.edges.push_back(std::move(edge));
  }

  void mechanism_statement()
  {
    const Token node = expect(Tok::ident);
    expect(Tok::equals);
    const Token type = expect(Tok::ident);
    site("mechanism:" + node.text, node.pos);
    if (doc_.mechanisms.count(node.text)) error("duplicate mechanism for '" + node.text + "'", node.pos, node.text);
    const ValueMap attrs = optional_attributes();

    if (type.text == "linear_gaussian") {
      LinearGaussian m;
      for (const auto & [key, v] : attrs) {
        if (key.text == "intercept") {
          m.intercept = as_number(v, "intercept");
        } else if (key.text == "noise_sd") {
          m.noise_sd = as_number(v, "noise_sd");
        } else if (key.text == "weights") {
          m.weights = as_weights(v);
        } else {
          unknown_attribute(key, "linear_gaussian mechanism");
        }
      }
      doc_.mechanisms.emplace(node.text, m);
    } else if (type.text == "logistic") {
      Logistic m;
      for (const auto & [key, v] : attrs) {
        if (key.text == "intercept") {
          m.intercept = as_number(v, "intercept");
        } else if (key.text == "weights") {
          m.weights = as_weights(v);
        } else {
          unknown_attribute(key, "logistic mechanism");
        }
      }
      doc_.mechanisms.emplace(node.text, m);
    } else if (type.text == "table") {
      TableCpd m;
      for (const auto & [key, v] : attrs) {
        if (key.text == "levels") {
          double levels = as_number(v, "levels");
          if (levels != std::floor(levels) || levels < 1 || levels > 1e6) {
            error("levels must be a positive integer", v.token.pos);
          }
          m.levels = static_cast<int>(levels);
        } else if (key.text == "parents") {
          m.parents = as_ident_list(v, "parents");
        } else if (key.text == "rows") {
          if (v.kind != Value::Kind::list) error("rows must be a list of lists", v.token.pos);
          for (const auto & row : *v.list) m.rows.push_back(as_number_list(row, "row"));
        } else {
          unknown_attribute(key, "table mechanism");
        }
      }
      doc_.mechanisms.emplace(node.text, m);
    } else {
      error("unknown mechanism type '" + type.text + "'", type.pos, type.text);
    }
  }

  void independence_statement()
  {
    const Token tag = expect(Tok::ident);
    site("independence:" + tag.text, tag.pos);
    AssertedIndependence ind;
    ind.tag = tag.text;
    bool has_x = false;
    bool has_y = false;
    for (const auto & [key, v] : optional_attributes()) {
      if (key.text == "x") {
        ind.x = as_ident(v, "x");
        has_x = true;
      } else if (key.text == "y") {
        ind.y = as_ident(v, "y");
        has_y = true;
      } else if (key.text == "given") {
        ind.given = as_ident_list(v, "given");
      } else {
        unknown_attribute(key, "independence");
      }
    }
    if (!has_x || !has_y) error("independence '" + tag.text + "' needs both x and y", tag.pos, tag.text);
    doc_.independencies.push_back(std::move(ind));
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  ModelDocument doc_;
  DeclarationSites sites_;
};

// ============================================================================
// Writer
// ============================================================================

std::string quote(const std::string & s)
{
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string number(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string ident_list(const std::vector<std::string> & items)
{
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

std::string weights(const std::map<std::string, double> & w)
{
  if (w.empty()) return "{}";
  std::string out = "{ ";
  bool first = true;
  for (const auto & [k, v] : w) {
    if (!first) out += ", ";
    first = false;
    out += k + ": " + number(v);
  }
  return out + " }";
}

std::string attributes(const std::vector<std::string> & parts)
{
  if (parts.empty()) return {};
  std::string out = " { ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + " }";
}

std::string write_dsl(const ModelDocument & doc)
{
  std::ostringstream out;
  out << "model " << quote(doc.name) << " {\n";
  for (const auto & a : doc.assumptions) out << "  assume " << a.tag << ' ' << quote(a.text) << '\n';
  if (!doc.assumptions.empty()) out << '\n';

  for (const auto & n : doc.nodes) {
    std::vector<std::string> parts{"kind: " + std::string(to_string(n.kind))};
    if (n.role != NodeRole::covariate) parts.push_back("role: " + std::string(to_string(n.role)));
    if (!n.traces.empty()) parts.push_back("traces: " + ident_list(n.traces));
    if (n.label) parts.push_back("label: " + quote(*n.label));
    if (n.controllable) parts.push_back(std::string("controllable: ") + (*n.controllable ? "true" : "false"));
    out << "  node " << n.name << attributes(parts) << '\n';
  }
  if (!doc.nodes.empty()) out << '\n';

  for (const auto & e : doc.edges) {
    std::vector<std::string> parts;
    if (!e.traces.empty()) parts.push_back("traces: " + ident_list(e.traces));
    if (e.mechanism_tag) parts.push_back("mechanism: " + quote(*e.mechanism_tag));
    out << "  edge " << e.from << " -> " << e.to << attributes(parts) << '\n';
  }

  if (!doc.mechanisms.empty()) out << '\n';
  for (const auto & [node, mech] : doc.mechanisms) {
    out << "  mechanism " << node << " = ";
    std::visit(
      [&](const auto & m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearGaussian>) {
          out << "linear_gaussian { intercept: " << number(m.intercept) << ", noise_sd: " << number(m.noise_sd)
              << ", weights: " << weights(m.weights) << " }";
        } else if constexpr (std::is_same_v<M, Logistic>) {
          out << "logistic { intercept: " << number(m.intercept) << ", weights: " << weights(m.weights) << " }";
        } else {
          out << "table { levels: " << m.levels << ", parents: " << ident_list(m.parents) << ", rows: [";
          for (std::size_t r = 0; r < m.rows.size(); ++r) {
            out << (r ? ", [" : "[");
            for (std::size_t c = 0; c < m.rows[r].size(); ++c) out << (c ? ", " : "") << number(m.rows[r][c]);
            out << ']';
          }
          out << "] }";
        }
      },
      mech);
    out << '\n';
  }

  if (!doc.independencies.empty()) out << '\n';
  for (const auto & ind : doc.independencies) {
    out << "  independence " << ind.tag << " { x: " << ind.x << ", y: " << ind.y
        << ", given: " << ident_list(ind.given) << " }\n";
  }
  out << "}\n";
  return out.str();
}

// ============================================================================
// JSON
// ============================================================================

using nlohmann::json;

[[noreturn]] void json_error(const std::string & msg) { throw ModelError(msg, {}); }

void only_keys(const json & obj, std::initializer_list<const char *> allowed, const std::string & where)
{
  if (!obj.is_object()) json_error(where + " must be an object");
  for (const auto & [k, _] : obj.items()) {
    bool ok = false;
    for (const char * a : allowed) ok = ok || k == a;
    if (!ok) throw ModelError("unknown attribute '" + k + "' for " + where, {}, k);
  }
}

const json & field(const json & obj, const char * key, const std::string & where)
{
  auto it = obj.find(key);
  if (it == obj.end()) json_error(where + " is missing '" + key + "'");
  return *it;
}

std::string get_string(const json & v, const std::string & what)
{
  if (!v.is_string()) json_error(what + " must be a string");
  return v.get<std::string>();
}

double get_number(const json & v, const std::string & what)
{
  if (!v.is_number()) json_error(what + " must be a number");
  return v.get<double>();
}

std::vector<std::string> get_strings(const json & v, const std::string & what)
{
  if (!v.is_array()) json_error(what + " must be an array");
  std::vector<std::string> out;
  for (const auto & item : v) out.push_back(get_string(item, what + " entry"));
  return out;
}

std::map<std::string, double> get_weights(const json & v)
{
  if (!v.is_object()) json_error("weights must be an object");
  std::map<std::string, double> out;
  for (const auto & [k, w] : v.items()) out[k] = get_number(w, "weight of '" + k + "'");
  return out;
}

}  // namespace

ModelDocument parse_model(std::string_view source)
{
  return Parser(Lexer(source).run()).run();
}

nlohmann::json to_json(const ModelDocument & doc)
{
  json j;
  j["model"] = doc.name;
  j["assumptions"] = json::array();
  for (const auto & a : doc.assumptions) j["assumptions"].push_back({{"tag", a.tag}, {"text", a.text}});
  j["nodes"] = json::array();
  for (const auto & n : doc.nodes) {
    json node{{"name", n.name}, {"kind", to_string(n.kind)}, {"role", to_string(n.role)}, {"traces", n.traces}};
    if (n.label) node["label"] = *n.label;
    if (n.controllable) node["controllable"] = *n.controllable;
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = json::array();
  for (const auto & e : doc.edges) {
    json edge{{"from", e.from}, {"to", e.to}, {"traces", e.traces}};
    if (e.mechanism_tag) edge["mechanism"] = *e.mechanism_tag;
    j["edges"].push_back(std::move(edge));
  }
  j["mechanisms"] = json::object();
  for (const auto & [node, mech] : doc.mechanisms) {
    j["mechanisms"][node] = std::visit(
      [](const auto & m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearGaussian>) {
          return {{"type", "linear_gaussian"}, {"intercept", m.intercept}, {"noise_sd", m.noise_sd},
                  {"weights", m.weights}};
        } else if constexpr (std::is_same_v<M, Logistic>) {
          return {{"type", "logistic"}, {"intercept", m.intercept}, {"weights", m.weights}};
        } else {
          return {{"type", "table"}, {"levels", m.levels}, {"parents", m.parents}, {"rows", m.rows}};
        }
      },
      mech);
  }
  j["independencies"] = json::array();
  for (const auto & ind : doc.independencies) {
    j["independencies"].push_back({{"tag", ind.tag}, {"x", ind.x}, {"y", ind.y}, {"given", ind.given}});
  }
  return j;
}

ModelDocument from_json(const nlohmann::json & j)
{
  only_keys(j, {"model", "assumptions", "nodes", "edges", "mechanisms", "independencies"}, "model");
  ModelDocument doc;
  doc.name = get_string(field(j, "model", "model"), "model");

  auto array_at = [&](const char * key) -> json {
    auto it = j.find(key);
    if (it == j.end()) return json::array();
    if (!it->is_array()) json_error(std::string(key) + " must be an array");
    return *it;
  };

  for (const auto & a : array_at("assumptions")) {
    only_keys(a, {"tag", "text"}, "assumption");
    doc.assumptions.push_back({get_string(field(a, "tag", "assumption"), "tag"),
                               get_string(field(a, "text", "assumption"), "text")});
  }
  for (const auto & n : array_at("nodes")) {
    only_keys(n, {"name", "kind", "role", "traces", "label", "controllable"}, "node");
    NodeDecl node;
    node.name = get_string(field(n, "name", "node"), "name");
    if (n.contains("kind")) {
      auto kind = parse_node_kind(get_string(n["kind"], "kind"));
      if (!kind) throw ModelError("kind must be observed or latent", {}, node.name);
      node.kind = *kind;
    }
    if (n.contains("role")) {
      auto role = parse_node_role(get_string(n["role"], "role"));
      if (!role) throw ModelError("role must be exposure, outcome, covariate or disturbance", {}, node.name);
      node.role = *role;
    }
    if (n.contains("traces")) node.traces = get_strings(n["traces"], "traces");
    if (n.contains("label")) node.label = get_string(n["label"], "label");
    if (n.contains("controllable")) {
      if (!n["controllable"].is_boolean()) json_error("controllable must be a boolean");
      node.controllable = n["controllable"].get<bool>();
    }
    doc.nodes.push_back(std::move(node));
  }
  for (const auto & e : array_at("edges")) {
    only_keys(e, {"from", "to", "traces", "mechanism"}, "edge");
    EdgeDecl edge{get_string(field(e, "from", "edge"), "from"), get_string(field(e, "to", "edge"), "to"), {},
                  std::nullopt};
    if (e.contains("traces")) edge.traces = get_strings(e["traces"], "traces");
    if (e.contains("mechanism")) edge.mechanism_tag = get_string(e["mechanism"], "mechanism");
    doc.edges.push_back(std::move(edge));
  }
  if (j.contains("mechanisms")) {
    const json & mechs = j["mechanisms"];
    if (!mechs.is_object()) json_error("mechanisms must be an object");
    for (const auto & [node, m] : mechs.items()) {
      if (!m.is_object()) json_error("mechanism for '" + node + "' must be an object");
      const std::string type = get_string(field(m, "type", "mechanism"), "type");
      if (type == "linear_gaussian") {
        only_keys(m, {"type", "intercept", "noise_sd", "weights"}, "linear_gaussian mechanism");
        LinearGaussian lg;
        if (m.contains("intercept")) lg.intercept = get_number(m["intercept"], "intercept");
        if (m.contains("noise_sd")) lg.noise_sd = get_number(m["noise_sd"], "noise_sd");
        if (m.contains("weights")) lg.weights = get_weights(m["weights"]);
        doc.mechanisms.emplace(node, lg);
      } else if (type == "logistic") {
        only_keys(m, {"type", "intercept", "weights"}, "logistic mechanism");
        Logistic lm;
        if (m.contains("intercept")) lm.intercept = get_number(m["intercept"], "intercept");
        if (m.contains("weights")) lm.weights = get_weights(m["weights"]);
        doc.mechanisms.emplace(node, lm);
      } else if (type == "table") {
        only_keys(m, {"type", "levels", "parents", "rows"}, "table mechanism");
        TableCpd t;
        if (m.contains("levels")) {
          if (!m["levels"].is_number_integer() || m["levels"].get<long long>() < 1) {
            json_error("levels must be a positive integer");
          }
          t.levels = m["levels"].get<int>();
        }
        if (m.contains("parents")) t.parents = get_strings(m["parents"], "parents");
        if (m.contains("rows")) {
          if (!m["rows"].is_array()) json_error("rows must be an array");
          for (const auto & row : m["rows"]) {
            if (!row.is_array()) json_error("row must be an array");
            std::vector<double> r;
            for (const auto & p : row) r.push_back(get_number(p, "probability"));
            t.rows.push_back(std::move(r));
          }
        }
        doc.mechanisms.emplace(node, t);
      } else {
        throw ModelError("unknown mechanism type '" + type + "'", {}, type);
      }
    }
  }
  for (const auto & ind : array_at("independencies")) {
    only_keys(ind, {"tag", "x", "y", "given"}, "independence");
    AssertedIndependence a;
    a.tag = get_string(field(ind, "tag", "independence"), "tag");
    a.x = get_string(field(ind, "x", "independence"), "x");
    a.y = get_string(field(ind, "y", "independence"), "y");
    if (ind.contains("given")) a.given = get_strings(ind["given"], "given");
    doc.independencies.push_back(std::move(a));
  }
  validate_document(doc);
  return doc;
}

ModelDocument parse_model_json(std::string_view source)
{
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error & e) {
    throw ModelError(std::string("invalid JSON: ") + e.what(), {});
  }
  return from_json(j);
}

ModelDocument parse_model_any(std::string_view source)
{
  for (char c : source) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parse_model_json(source) : parse_model(source);
  }
  return parse_model(source);
}

std::string serialize(const ModelDocument & doc, Format format)
{
  if (format == Format::json) return to_json(doc).dump(2) + "\n";
  return write_dsl(doc);
}

ModelDocument load_model_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_any(buf.str());
}

}  // namespace causal
