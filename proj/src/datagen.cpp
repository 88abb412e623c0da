#include "opad/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "opad/rng.hpp"

namespace opad {

namespace {

constexpr double kZeroVarianceTolerance = 1e-12;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void center_columns(Eigen::MatrixXd& m) {
  if (m.rows() == 0) return;
  m.rowwise() -= m.colwise().mean();
}

void standardize_columns(Eigen::MatrixXd& m, std::span<const std::string> names) {
  center_columns(m);
  const double rows = static_cast<double>(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double sd = std::sqrt(m.col(j).squaredNorm() / rows);
    if (!(sd > kZeroVarianceTolerance)) {
      const auto idx = static_cast<std::size_t>(j);
      const std::string label = idx < names.size() ? "'" + names[idx] + "'" : std::to_string(j);
      throw DataError("column " + label + " has zero variance and cannot be standardized");
    }
    m.col(j) /= sd;
  }
  // One more centering pass removes the rounding left by the division.
  center_columns(m);
}

std::pair<Dataset, BvsTruth> generate_bvs(std::size_t m, std::size_t n, double rho,
                                          std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("generate_bvs: m and n must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("generate_bvs: rho must lie in [0, 1]");
  Rng rng = make_rng(seed);
  std::bernoulli_distribution include(rho);
  std::uniform_real_distribution<double> coef(-4.0, 4.0);
  std::uniform_real_distribution<double> design(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  BvsTruth truth;
  truth.gamma.resize(m);
  truth.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) truth.gamma[j] = include(rng) ? 1 : 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double alpha = coef(rng);
    if (truth.gamma[j]) truth.beta(static_cast<Eigen::Index>(j)) = alpha;
  }

  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = design(rng);
  }
  center_columns(data.x);

  Eigen::VectorXd y = data.x * truth.beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise(rng);
  y.array() -= y.mean();
  data.y = std::move(y);

  for (std::size_t j = 0; j < m; ++j) data.column_names.push_back("x" + std::to_string(j + 1));
  data.response_name = "y";
  std::ostringstream prov;
  prov << "generate_bvs(m=" << m << ", n=" << n << ", rho=" << rho << ", seed=" << seed << ")";
  data.provenance = prov.str();
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, BslTruth> generate_bsl(std::size_t n_nodes, std::size_t degree,
                                          std::size_t n_rows, std::uint64_t seed) {
  if (n_nodes < 2 || n_nodes > kMaxDagNodes) {
    throw std::invalid_argument("generate_bsl: n_nodes must be in [2, 64]");
  }
  if (degree >= n_nodes) throw std::invalid_argument("generate_bsl: degree must be below n_nodes");
  if (n_rows < 2) throw std::invalid_argument("generate_bsl: need at least two rows");
  Rng rng = make_rng(seed);

  std::vector<std::size_t> order(n_nodes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const double p = static_cast<double>(degree) / static_cast<double>(n_nodes - 1);
  std::bernoulli_distribution edge(p);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  const auto n = static_cast<Eigen::Index>(n_nodes);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::uint64_t> children(n_nodes, 0);
  for (std::size_t a = 0; a < n_nodes; ++a) {
    for (std::size_t b = a + 1; b < n_nodes; ++b) {
      if (edge(rng)) {
        children[order[a]] |= 1ull << order[b];
        weights(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b])) = weight(rng);
      }
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n_rows), n);
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    for (std::size_t node : order) {
      const auto j = static_cast<Eigen::Index>(node);
      double v = noise(rng);
      for (Eigen::Index parent = 0; parent < n; ++parent) {
        if (weights(parent, j) != 0.0) v += weights(parent, j) * data.x(r, parent);
      }
      data.x(r, j) = v;
    }
  }
  standardize_columns(data.x);

  for (std::size_t j = 0; j < n_nodes; ++j) data.column_names.push_back("x" + std::to_string(j + 1));
  std::ostringstream prov;
  prov << "generate_bsl(n_nodes=" << n_nodes << ", degree=" << degree << ", n_rows=" << n_rows
       << ", seed=" << seed << ")";
  data.provenance = prov.str();
  BslTruth truth{DagState(n_nodes, std::move(children)), std::move(weights), std::move(order)};
  return {std::move(data), std::move(truth)};
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response, bool standardize) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  std::vector<std::string> header = split_fields(line);
  for (auto& h : header) h = trim(h);

  std::optional<std::size_t> response_col;
  if (!response.empty()) {
    auto it = std::find(header.begin(), header.end(), response);
    if (it == header.end()) throw DataError(path.string() + ": no column named '" + response + "'");
    response_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string cell = trim(fields[c]);
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, row[c]);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[c])) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": column '" + header[c] +
                        "' has non-numeric value '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto predictors = static_cast<Eigen::Index>(header.size() - (response_col ? 1 : 0));
  data.x.resize(n, predictors);
  Eigen::VectorXd y(response_col ? n : 0);
  for (std::size_t c = 0, out = 0; c < header.size(); ++c) {
    if (response_col && c == *response_col) {
      for (Eigen::Index r = 0; r < n; ++r) y(r) = rows[static_cast<std::size_t>(r)][c];
      continue;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      data.x(r, static_cast<Eigen::Index>(out)) = rows[static_cast<std::size_t>(r)][c];
    }
    data.column_names.push_back(header[c]);
    ++out;
  }

  if (standardize) {
    try {
      standardize_columns(data.x, data.column_names);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  } else {
    center_columns(data.x);
  }
  if (response_col) {
    y.array() -= y.mean();
    data.y = std::move(y);
    data.response_name = response;
  }
  data.provenance = "load_csv(" + path.string() + ")";
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto cols = data.x.cols();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (j) out << ',';
    out << (static_cast<std::size_t>(j) < data.column_names.size()
                ? data.column_names[static_cast<std::size_t>(j)]
                : "x" + std::to_string(j + 1));
  }
  if (data.y) out << (cols ? "," : "") << (data.response_name.empty() ? "y" : data.response_name);
  out << '\n';
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << format_double(data.x(r, j));
    }
    if (data.y) out << (cols ? "," : "") << format_double((*data.y)(r));
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

BvsParams make_bvs_params(const Dataset& data, double g, double a, double b, double rho) {
  if (!data.y) throw DataError("dataset has no response column");
  BvsParams p;
  p.x = data.x;
  p.y = *data.y;
  p.g = g;
  p.a = a;
  p.b = b;
  p.rho = rho;
  return p;
}

BslParams make_bsl_params(const Dataset& data, double g, double a, double b) {
  BslParams p;
  p.data = data.x;
  p.g = g;
  p.a = a;
  p.b = b;
  return p;
}

}  // namespace opad
