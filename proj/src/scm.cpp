#include "causal/scm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

namespace causal
{

namespace
{

constexpr double log_two_pi = 1.8378770664093454836;

double sigmoid(double eta)
{
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

/// log(sigmoid(eta)) without overflow.
double log_sigmoid(double eta)
{
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

bool is_code(double v, int levels)
{
  return std::isfinite(v) && v == std::floor(v) && v >= 0 && v < levels;
}

std::size_t table_row(const TableCpd & t, const std::vector<int> & parent_levels,
                      const std::vector<double> & parent_values)
{
  std::size_t row = 0;
  for (std::size_t i = 0; i < t.parents.size(); ++i) {
    row = row * static_cast<std::size_t>(parent_levels[i]) + static_cast<std::size_t>(parent_values[i]);
  }
  return row;
}

}  // namespace

// ============================================================================
// ScmSpec
// ============================================================================

ScmSpec::ScmSpec(CausalDag dag, std::map<std::string, MechanismDecl> mechanisms)
    : dag_(std::move(dag)), mechanisms_(std::move(mechanisms))
{
  for (const auto & [name, _] : mechanisms_) {
    if (!dag_.contains(name)) throw ScmError("mechanism for unknown node '" + name + "'");
  }
  for (const auto & node : dag_.nodes()) {
    auto it = mechanisms_.find(node.name);
    if (it == mechanisms_.end()) throw ScmError("node '" + node.name + "' has no mechanism");
    const NodeSet parents = dag_.parents(node.name);

    auto check_weights = [&](const std::map<std::string, double> & weights) {
      NodeSet keys;
      for (const auto & [k, w] : weights) {
        keys.insert(k);
        if (!std::isfinite(w)) throw ScmError("non-finite weight on '" + k + "' -> '" + node.name + "'");
      }
      if (keys != parents) throw ScmError("weights of '" + node.name + "' must name exactly its parents");
    };

    std::visit(
      [&](const auto & m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearGaussian>) {
          check_weights(m.weights);
          if (!(m.noise_sd > 0) || !std::isfinite(m.noise_sd)) {
            throw ScmError("noise_sd of '" + node.name + "' must be positive");
          }
          if (!std::isfinite(m.intercept)) throw ScmError("non-finite intercept for '" + node.name + "'");
        } else if constexpr (std::is_same_v<M, Logistic>) {
          check_weights(m.weights);
          if (!std::isfinite(m.intercept)) throw ScmError("non-finite intercept for '" + node.name + "'");
        } else {
          if (m.levels < 1) throw ScmError("table for '" + node.name + "' needs at least one level");
          if (NodeSet(m.parents.begin(), m.parents.end()) != parents || m.parents.size() != parents.size()) {
            throw ScmError("table parents of '" + node.name + "' must list exactly its parents");
          }
        }
      },
      it->second);
  }
  // Table rows need parent level counts, so check them once every node is known.
  for (const auto & [name, mech] : mechanisms_) {
    const auto * t = std::get_if<TableCpd>(&mech);
    if (!t) continue;
    std::size_t expected = 1;
    for (const auto & p : t->parents) {
      const int l = levels(p);
      if (l == 0) throw ScmError("table parent '" + p + "' of '" + name + "' is not categorical");
      expected *= static_cast<std::size_t>(l);
    }
    if (t->rows.size() != expected) {
      throw ScmError("table for '" + name + "' needs " + std::to_string(expected) + " rows");
    }
    for (const auto & row : t->rows) {
      if (row.size() != static_cast<std::size_t>(t->levels)) {
        throw ScmError("table row for '" + name + "' must have one entry per level");
      }
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ScmError("table for '" + name + "' has a negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw ScmError("table row for '" + name + "' does not sum to 1");
    }
  }
}

ScmSpec ScmSpec::from_document(const ModelDocument & doc)
{
  return ScmSpec(CausalDag::build(doc), doc.mechanisms);
}

const MechanismDecl & ScmSpec::mechanism(const std::string & node) const
{
  auto it = mechanisms_.find(node);
  if (it == mechanisms_.end()) throw UnknownNodeError(node);
  return it->second;
}

int ScmSpec::levels(const std::string & node) const
{
  const MechanismDecl & m = mechanism(node);
  if (std::holds_alternative<Logistic>(m)) return 2;
  if (const auto * t = std::get_if<TableCpd>(&m)) return t->levels;
  return 0;
}

// ============================================================================
// Sampling
// ============================================================================

const std::vector<double> & Dataset::column(const std::string & name) const
{
  auto it = columns.find(name);
  if (it == columns.end()) throw DataError("dataset has no column '" + name + "'");
  return it->second;
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view node)
{
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : node) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = seed ^ h;  // splitmix64 finaliser
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Dataset sample(const ScmSpec & scm, std::size_t n, std::uint64_t seed)
{
  const CausalDag & dag = scm.dag();
  Dataset data;
  data.n = n;
  data.seed = seed;
  for (const auto & node : dag.nodes()) data.names.push_back(node.name);

  for (const auto & name : dag.topological_order()) {
    std::mt19937_64 rng(substream_seed(seed, name));
    std::vector<double> & out = data.columns[name];
    out.resize(n);
    if (scm.categorical(name)) data.categorical.insert(name);

    std::visit(
      [&](const auto & m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearGaussian> || std::is_same_v<M, Logistic>) {
          std::vector<std::pair<const std::vector<double> *, double>> terms;
          for (const auto & [p, w] : m.weights) terms.emplace_back(&data.columns.at(p), w);
          std::normal_distribution<double> normal(0.0, 1.0);
          std::uniform_real_distribution<double> uniform(0.0, 1.0);
          for (std::size_t i = 0; i < n; ++i) {
            double eta = m.intercept;
            for (const auto & [col, w] : terms) eta += w * (*col)[i];
            if constexpr (std::is_same_v<M, LinearGaussian>) {
              out[i] = eta + m.noise_sd * normal(rng);
            } else {
              out[i] = uniform(rng) < sigmoid(eta) ? 1.0 : 0.0;
            }
          }
        } else {
          std::vector<const std::vector<double> *> cols;
          std::vector<int> parent_levels;
          for (const auto & p : m.parents) {
            cols.push_back(&data.columns.at(p));
            parent_levels.push_back(scm.levels(p));
          }
          std::uniform_real_distribution<double> uniform(0.0, 1.0);
          std::vector<double> values(cols.size());
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < cols.size(); ++k) values[k] = (*cols[k])[i];
            const auto & row = m.rows[table_row(m, parent_levels, values)];
            double u = uniform(rng);
            int level = 0;
            while (level + 1 < m.levels && u >= row[static_cast<std::size_t>(level)]) {
              u -= row[static_cast<std::size_t>(level)];
              ++level;
            }
            out[i] = level;
          }
        }
      },
      scm.mechanism(name));
  }
  return data;
}

double log_density(const ScmSpec & scm, const std::map<std::string, double> & record)
{
  auto value = [&](const std::string & name) {
    auto it = record.find(name);
    if (it == record.end()) throw DataError("record has no value for '" + name + "'");
    if (!std::isfinite(it->second)) throw DataError("non-finite value for '" + name + "'");
    return it->second;
  };

  double total = 0.0;
  for (const auto & node : scm.dag().nodes()) {
    const double x = value(node.name);
    total += std::visit(
      [&](const auto & m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearGaussian> || std::is_same_v<M, Logistic>) {
          double eta = m.intercept;
          for (const auto & [p, w] : m.weights) eta += w * value(p);
          if constexpr (std::is_same_v<M, LinearGaussian>) {
            const double r = (x - eta) / m.noise_sd;
            return -0.5 * log_two_pi - std::log(m.noise_sd) - 0.5 * r * r;
          } else {
            if (!is_code(x, 2)) throw DataError("value of '" + node.name + "' outside its levels {0, 1}");
            return x == 1.0 ? log_sigmoid(eta) : log_sigmoid(-eta);
          }
        } else {
          if (!is_code(x, m.levels)) throw DataError("value of '" + node.name + "' outside its declared levels");
          std::vector<int> parent_levels;
          std::vector<double> values;
          for (const auto & p : m.parents) {
            parent_levels.push_back(scm.levels(p));
            values.push_back(value(p));
            if (!is_code(values.back(), parent_levels.back())) {
              throw DataError("value of '" + p + "' outside its declared levels");
            }
          }
          return std::log(m.rows[table_row(m, parent_levels, values)][static_cast<std::size_t>(x)]);
        }
      },
      scm.mechanism(node.name));
  }
  return total;
}

// ============================================================================
// Conditional independence tests
// ============================================================================

std::string_view to_string(CiMethod m)
{
  return m == CiMethod::fisher_z ? "fisher_z" : "g_test";
}

double pearson(std::span<const double> x, std::span<const double> y)
{
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

namespace
{

bool zero_variance(const std::vector<double> & v)
{
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

CiTestResult fisher_z(const Dataset & data, const CiStatement & s, double alpha)
{
  const std::size_t n = data.n;
  const std::size_t k = s.given.size();
  if (n <= k + 3) throw DataError("insufficient samples for fisher_z: need more than " + std::to_string(k + 3));

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(k + 1));
  design.col(0).setOnes();
  Eigen::Index c = 1;
  for (const auto & z : s.given) {
    const auto & col = data.column(z);
    if (zero_variance(col)) throw DataError("zero-variance column '" + z + "'");
    design.col(c++) = Eigen::Map<const Eigen::VectorXd>(col.data(), rows);
  }
  const auto & xs = data.column(s.x);
  const auto & ys = data.column(s.y);
  if (zero_variance(xs)) throw DataError("zero-variance column '" + s.x + "'");
  if (zero_variance(ys)) throw DataError("zero-variance column '" + s.y + "'");

  Eigen::MatrixXd targets(rows, 2);
  targets.col(0) = Eigen::Map<const Eigen::VectorXd>(xs.data(), rows);
  targets.col(1) = Eigen::Map<const Eigen::VectorXd>(ys.data(), rows);
  const Eigen::MatrixXd beta = design.colPivHouseholderQr().solve(targets);
  const Eigen::MatrixXd resid = targets - design * beta;

  double r = pearson(std::span<const double>(resid.col(0).data(), n), std::span<const double>(resid.col(1).data(), n));
  if (!std::isfinite(r)) throw DataError("residuals of '" + s.x + "' or '" + s.y + "' have zero variance");
  r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);

  CiTestResult out;
  out.statement = s;
  out.method = CiMethod::fisher_z;
  out.alpha = alpha;
  out.statistic = std::sqrt(static_cast<double>(n - k - 3)) * std::atanh(r);
  out.p_value = std::erfc(std::abs(out.statistic) / std::sqrt(2.0));
  out.rejected = out.p_value < alpha;
  return out;
}

/// Integer codes for a column; continuous columns become quantile bins.
std::vector<long long> codes(const Dataset & data, const std::string & name, std::size_t bins, bool must_be_categorical)
{
  const auto & col = data.column(name);
  std::vector<long long> out(col.size());
  const bool integral = std::all_of(col.begin(), col.end(), [](double v) { return v == std::floor(v); });
  if (data.categorical.count(name) || integral) {
    for (std::size_t i = 0; i < col.size(); ++i) out[i] = static_cast<long long>(col[i]);
    return out;
  }
  if (must_be_categorical) throw DataError("g_test requires categorical column '" + name + "'");
  std::vector<double> sorted = col;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (std::size_t b = 1; b < bins; ++b) cuts.push_back(sorted[b * sorted.size() / bins]);
  for (std::size_t i = 0; i < col.size(); ++i) {
    out[i] = std::upper_bound(cuts.begin(), cuts.end(), col[i]) - cuts.begin();
  }
  return out;
}

CiTestResult g_test(const Dataset & data, const CiStatement & s, double alpha, std::size_t bins)
{
  if (data.n <= s.given.size() + 3) throw DataError("insufficient samples for g_test");
  const auto xs = codes(data, s.x, bins, true);
  const auto ys = codes(data, s.y, bins, true);
  std::vector<std::vector<long long>> zs;
  for (const auto & z : s.given) zs.push_back(codes(data, z, bins, false));
  if (std::all_of(xs.begin(), xs.end(), [&](auto v) { return v == xs.front(); })) {
    throw DataError("zero-variance column '" + s.x + "'");
  }
  if (std::all_of(ys.begin(), ys.end(), [&](auto v) { return v == ys.front(); })) {
    throw DataError("zero-variance column '" + s.y + "'");
  }

  // stratum -> (x, y) -> count
  std::map<std::vector<long long>, std::map<std::pair<long long, long long>, double>> strata;
  std::vector<long long> key(zs.size());
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t k = 0; k < zs.size(); ++k) key[k] = zs[k][i];
    strata[key][{xs[i], ys[i]}] += 1.0;
  }

  double g = 0.0;
  double dof = 0.0;
  for (const auto & [_, table] : strata) {
    std::map<long long, double> rows;
    std::map<long long, double> cols;
    double total = 0.0;
    for (const auto & [cell, count] : table) {
      rows[cell.first] += count;
      cols[cell.second] += count;
      total += count;
    }
    for (const auto & [cell, count] : table) {
      const double expected = rows[cell.first] * cols[cell.second] / total;
      g += 2.0 * count * std::log(count / expected);
    }
    dof += static_cast<double>(rows.size() - 1) * static_cast<double>(cols.size() - 1);
  }

  CiTestResult out;
  out.statement = s;
  out.method = CiMethod::g_test;
  out.alpha = alpha;
  out.statistic = std::max(g, 0.0);
  out.dof = dof;
  out.p_value = dof > 0 ? boost::math::gamma_q(dof / 2.0, out.statistic / 2.0) : 1.0;
  out.rejected = out.p_value < alpha;
  return out;
}

}  // namespace

CiTestResult ci_test(const Dataset & data, const CiStatement & statement, double alpha, CiMethod method,
                     std::size_t bins)
{
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (bins < 2) throw std::invalid_argument("need at least two bins");
  data.column(statement.x);
  data.column(statement.y);
  for (const auto & z : statement.given) data.column(z);
  return method == CiMethod::fisher_z ? fisher_z(data, statement, alpha) : g_test(data, statement, alpha, bins);
}

ValidationReport validate_statements(const Dataset & data, const std::vector<CiStatement> & statements, double alpha,
                                     CiMethod method)
{
  ValidationReport report;
  for (const auto & s : statements) {
    report.results.push_back(ci_test(data, s, alpha, method));
    if (report.results.back().rejected) ++report.violations;
  }
  return report;
}

ValidationReport validate_model(const CausalDag & dag, const Dataset & data, const NodeSet & scope, double alpha,
                                CiMethod method, std::size_t max_given)
{
  if (scope.size() < 2) return {};
  for (const auto & v : scope) data.column(v);
  return validate_statements(data, implied_independencies(dag, scope, max_given), alpha, method);
}

// ============================================================================
// CSV
// ============================================================================

std::string to_csv(const Dataset & data)
{
  std::string out;
  for (std::size_t c = 0; c < data.names.size(); ++c) {
    if (c) out += ',';
    out += data.names[c];
  }
  out += '\n';
  std::vector<const std::vector<double> *> cols;
  for (const auto & name : data.names) cols.push_back(&data.column(name));
  char buf[64];
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, (*cols[c])[i]);
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

Dataset read_csv(std::string_view text)
{
  Dataset data;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view & line) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  };
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      cells.push_back(cell);
      if (comma == std::string_view::npos) return cells;
      start = comma + 1;
    }
  };

  std::string_view line;
  if (!next_line(line)) throw DataError("CSV input has no header row");
  for (auto cell : split(line)) {
    std::string name(cell);
    if (name.empty()) throw DataError("CSV header has an empty column name");
    if (data.columns.count(name)) throw DataError("CSV header repeats column '" + name + "'");
    data.names.push_back(name);
    data.columns[name];
  }
  while (next_line(line)) {
    const auto cells = split(line);
    if (cells.size() != data.names.size()) {
      throw DataError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(data.names.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (ec != std::errc() || ptr != cells[c].data() + cells[c].size()) {
        throw DataError("CSV line " + std::to_string(line_no) + ": malformed number '" + std::string(cells[c]) + "'");
      }
      data.columns[data.names[c]].push_back(v);
    }
    ++data.n;
  }
  for (const auto & name : data.names) {
    const auto & col = data.columns[name];
    if (!col.empty() && std::all_of(col.begin(), col.end(), [](double v) { return v == std::floor(v); })) {
      data.categorical.insert(name);
    }
  }
  return data;
}

}  // namespace causal
