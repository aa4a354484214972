#include "kdpc/io.hpp"

#include "kdpc/error.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace kdpc {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_row(const std::string& line, const fs::path& path, std::size_t lineno) {
  std::vector<double> row;
  const char* p = line.c_str();
  while (*p != '\0') {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    require(end != p && errno != ERANGE, ErrorCode::io,
            path.string() + ":" + std::to_string(lineno) + ": malformed number");
    row.push_back(v);
    p = end;
    while (*p == ' ' || *p == '\r') ++p;
    if (*p == ',') {
      ++p;
    } else {
      require(*p == '\0', ErrorCode::io,
              path.string() + ":" + std::to_string(lineno) + ": expected ','");
    }
  }
  return row;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::io, path.string() + ": " + e.what());
  }
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string s;
  s.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) s += ',';
      s += format_double(m(i, j));
    }
    s += '\n';
  }
  write_text(path, s);
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    rows.push_back(parse_row(line, path, lineno));
    require(rows.back().size() == rows.front().size(), ErrorCode::io,
            path.string() + ":" + std::to_string(lineno) + ": ragged row");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), digest, &len) == 1,
          ErrorCode::io, "SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

void save_dataset(const fs::path& dir, const Dataset& d) {
  d.validate();
  fs::create_directories(dir);
  write_matrix_csv(dir / "d_ini.csv", d.d_ini);
  write_matrix_csv(dir / "d_f_u.csv", d.d_f_u);
  write_matrix_csv(dir / "y_f.csv", d.y_f);
  json meta = {{"t_ini", d.t_ini},          {"n_horizon", d.n_horizon}, {"n_u", 1},
               {"n_y", 1},                  {"columns", d.num_columns()},
               {"layout", "d_ini rows: du_ini (t_ini) then y_ini (t_ini)"}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  Dataset d;
  try {
    d.t_ini = meta.at("t_ini").get<Eigen::Index>();
    d.n_horizon = meta.at("n_horizon").get<Eigen::Index>();
  } catch (const json::exception& e) {
    fail(ErrorCode::io, (dir / "meta.json").string() + ": " + e.what());
  }
  d.d_ini = read_matrix_csv(dir / "d_ini.csv");
  d.d_f_u = read_matrix_csv(dir / "d_f_u.csv");
  d.y_f = read_matrix_csv(dir / "y_f.csv");
  d.validate();
  return d;
}

std::string dataset_hash(const fs::path& dir) {
  return sha256_hex(sha256_file(dir / "d_ini.csv") + sha256_file(dir / "d_f_u.csv") +
                    sha256_file(dir / "y_f.csv"));
}

void save_predictors(const fs::path& dir, const Predictors& p) {
  p.validate();
  fs::create_directories(dir);
  write_matrix_csv(dir / "p1.csv", p.p1);
  write_matrix_csv(dir / "p2.csv", p.p2);
  write_matrix_csv(dir / "past_points.csv", p.past_points);
  json meta = {{"t_ini", p.t_ini},
               {"n_horizon", p.n_horizon},
               {"lambda", format_double(p.lambda_reg)},
               {"mu", format_double(p.mu_reg)},
               {"bandwidth_past", format_double(p.kernel_past.bandwidth)},
               {"bandwidth_future", format_double(p.kernel_future.bandwidth)},
               {"kernel", "gaussian_rbf"},
               {"dataset_hash", p.dataset_hash}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Predictors load_predictors(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  Predictors p;
  try {
    p.t_ini = meta.at("t_ini").get<Eigen::Index>();
    p.n_horizon = meta.at("n_horizon").get<Eigen::Index>();
    p.lambda_reg = std::strtod(meta.at("lambda").get<std::string>().c_str(), nullptr);
    p.mu_reg = std::strtod(meta.at("mu").get<std::string>().c_str(), nullptr);
    p.kernel_past.bandwidth =
        std::strtod(meta.at("bandwidth_past").get<std::string>().c_str(), nullptr);
    p.kernel_future.bandwidth =
        std::strtod(meta.at("bandwidth_future").get<std::string>().c_str(), nullptr);
    p.dataset_hash = meta.at("dataset_hash").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::io, (dir / "meta.json").string() + ": " + e.what());
  }
  p.p1 = read_matrix_csv(dir / "p1.csv");
  p.p2 = read_matrix_csv(dir / "p2.csv");
  p.past_points = read_matrix_csv(dir / "past_points.csv");
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorCode::io, dir.string() + ": " + e.what());
  }
  return p;
}

std::string predictors_hash(const fs::path& dir) {
  return sha256_hex(sha256_file(dir / "p1.csv") + sha256_file(dir / "p2.csv") +
                    sha256_file(dir / "past_points.csv") + sha256_file(dir / "meta.json"));
}

void write_trace_csv(const fs::path& path, const ControllerTrace& tr) {
  std::string s = "t,y,y_ref,u,delta_u,d,cost,status,slack,kkt_residual\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    s += format_double(tr.t[i]) + ',' + format_double(tr.y[i]) + ',' +
         format_double(tr.y_ref[i]) + ',' + format_double(tr.u[i]) + ',' +
         format_double(tr.delta_u[i]) + ',' + format_double(tr.d_in[i] + tr.d_out[i]) + ',' +
         format_double(tr.cost[i]) + ',' + std::string(to_string(tr.status[i])) + ',' +
         format_double(tr.slack[i]) + ',' + format_double(tr.kkt[i]) + '\n';
  }
  write_text(path, s);
}

}  // namespace kdpc
