#pragma once

#include "kdpc/data.hpp"
#include "kdpc/experiments.hpp"
#include "kdpc/predictor.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>

namespace kdpc {

namespace fs = std::filesystem;

/// Comma-separated rows, no header, values printed with 17 significant
/// digits so a write/read round trip is exact.
void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const fs::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Directory with d_ini.csv, d_f_u.csv, y_f.csv and meta.json.
void save_dataset(const fs::path& dir, const Dataset& d);
Dataset load_dataset(const fs::path& dir);
/// Hash over the three matrix files.
std::string dataset_hash(const fs::path& dir);

/// Directory with p1.csv, p2.csv, past_points.csv and meta.json.
void save_predictors(const fs::path& dir, const Predictors& p);
Predictors load_predictors(const fs::path& dir);
std::string predictors_hash(const fs::path& dir);

/// Columns: t, y, y_ref, u, delta_u, d, cost, status, slack, kkt_residual.
/// d is the sum of the input and output disturbances active at t.
void write_trace_csv(const fs::path& path, const ControllerTrace& trace);

}  // namespace kdpc
