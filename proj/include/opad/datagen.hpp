#pragma once

// Synthetic datasets for variable selection and structure learning, plus CSV
// ingestion and export.
//
// CSV dialect: comma separated, one header row of column names, '.' decimal
// point, no quoting. Saved files use the same layout with the response column
// (when present) written last, so load_csv(save_csv(d)) reproduces d.
//
// Variance here is the population variance (divide by the row count).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opad/core.hpp"
#include "opad/dag.hpp"
#include "opad/targets.hpp"

namespace opad {

class DataError : public Error {
 public:
  using Error::Error;
};

struct Dataset {
  Eigen::MatrixXd x;                 // rows x predictors
  std::optional<Eigen::VectorXd> y;  // response, when the dataset has one
  std::vector<std::string> column_names;
  std::string response_name;
  std::string provenance;
};

struct BvsTruth {
  std::vector<std::uint8_t> gamma;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
};

struct BslTruth {
  DagState dag;
  Eigen::MatrixXd weights;           // weights(i, j) is the coefficient of edge i -> j
  std::vector<std::size_t> order;    // topological order used to build the DAG
};

void center_columns(Eigen::MatrixXd& m);
/// Zero mean and unit population variance per column. Throws DataError on a
/// constant column, naming it from `names` when given.
void standardize_columns(Eigen::MatrixXd& m, std::span<const std::string> names = {});

/// gamma_j ~ Bernoulli(rho); beta_j = gamma_j * Unif(-4, 4); X_ij ~ Unif(-3, 3)
/// column-centered; y = X beta + N(0, 1) noise, then centered.
std::pair<Dataset, BvsTruth> generate_bvs(std::size_t m, std::size_t n, double rho,
                                          std::uint64_t seed);

/// Erdos-Renyi DAG under a uniform node permutation with edge probability
/// degree / (n_nodes - 1), edge weights ~ Unif(0, 2), and n_rows ancestral
/// samples of the linear Gaussian SEM with unit noise. Columns standardized.
std::pair<Dataset, BslTruth> generate_bsl(std::size_t n_nodes, std::size_t degree,
                                          std::size_t n_rows, std::uint64_t seed);

/// Reads a CSV. When `response` is non-empty that column becomes the centered
/// y; the rest become X, centered, and scaled to unit variance when
/// `standardize` is set.
Dataset load_csv(const std::filesystem::path& path, const std::string& response, bool standardize);

void save_csv(const Dataset& data, const std::filesystem::path& path);

BvsParams make_bvs_params(const Dataset& data, double g, double a, double b, double rho);
BslParams make_bsl_params(const Dataset& data, double g, double a, double b);

}  // namespace opad
