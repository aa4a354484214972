#include "kdpc/kdpc.h"

#include "kdpc/config.hpp"
#include "kdpc/controller.hpp"
#include "kdpc/error.hpp"
#include "kdpc/io.hpp"
#include "kdpc/pipeline.hpp"

#include <cstring>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <new>
#include <string>

struct kdpc_config {
  kdpc::RunConfig cfg;
};

struct kdpc_predictors {
  std::shared_ptr<const kdpc::Predictors> p;
};

struct kdpc_controller {
  kdpc::KdpcController ctrl;
};

namespace {

thread_local std::string last_error;

std::mutex log_mutex;
kdpc_log_fn log_fn = nullptr;
void* log_user = nullptr;

kdpc_status to_status(kdpc::ErrorCode c) {
  using kdpc::ErrorCode;
  switch (c) {
    case ErrorCode::invalid_argument: return KDPC_ERR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return KDPC_ERR_DIMENSION;
    case ErrorCode::config: return KDPC_ERR_CONFIG;
    case ErrorCode::pe_failure: return KDPC_ERR_PE;
    case ErrorCode::fit_failure: return KDPC_ERR_FIT;
    case ErrorCode::diverged: return KDPC_ERR_DIVERGED;
    case ErrorCode::not_warm: return KDPC_ERR_NOT_WARM;
    case ErrorCode::io: return KDPC_ERR_IO;
  }
  return KDPC_ERR_INTERNAL;
}

template <class F>
kdpc_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const kdpc::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return KDPC_ERR_INTERNAL;
}

kdpc_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return KDPC_ERR_INVALID_ARGUMENT;
}

// Forwards whole lines to the registered callback, or stdout.
class LineSink : public std::streambuf {
 public:
  ~LineSink() override {
    if (!line_.empty()) emit();
  }

 protected:
  int_type overflow(int_type ch) override {
    if (traits_type::eq_int_type(ch, traits_type::eof())) return traits_type::not_eof(ch);
    if (ch == '\n') {
      emit();
    } else {
      line_.push_back(traits_type::to_char_type(ch));
    }
    return ch;
  }

 private:
  void emit() {
    std::lock_guard lock(log_mutex);
    if (log_fn) {
      log_fn(line_.c_str(), log_user);
    } else {
      std::cout << line_ << '\n' << std::flush;
    }
    line_.clear();
  }

  std::string line_;
};

}  // namespace

extern "C" {

const char* kdpc_version(void) { return "0.1.0"; }

const char* kdpc_status_string(kdpc_status s) {
  switch (s) {
    case KDPC_OK: return "ok";
    case KDPC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KDPC_ERR_DIMENSION: return "dimension mismatch";
    case KDPC_ERR_CONFIG: return "configuration error";
    case KDPC_ERR_PE: return "insufficient excitation";
    case KDPC_ERR_FIT: return "fit failure";
    case KDPC_ERR_DIVERGED: return "closed loop diverged";
    case KDPC_ERR_NOT_WARM: return "controller not warm";
    case KDPC_ERR_IO: return "i/o error";
    case KDPC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* kdpc_last_error(void) { return last_error.c_str(); }

void kdpc_set_log(kdpc_log_fn fn, void* user) {
  std::lock_guard lock(log_mutex);
  log_fn = fn;
  log_user = user;
}

kdpc_status kdpc_config_default(kdpc_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new kdpc_config{kdpc::default_config()};
    return KDPC_OK;
  });
}

kdpc_status kdpc_config_load(const char* path, kdpc_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new kdpc_config{kdpc::load_config(path)};
    return KDPC_OK;
  });
}

kdpc_status kdpc_config_parse(const char* yaml, kdpc_config** out) {
  if (!yaml) return null_arg("yaml");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new kdpc_config{kdpc::parse_config(yaml)};
    return KDPC_OK;
  });
}

kdpc_status kdpc_config_set_seed(kdpc_config* cfg, uint64_t seed) {
  if (!cfg) return null_arg("cfg");
  cfg->cfg.seed = seed;
  return KDPC_OK;
}

kdpc_status kdpc_config_set_output(kdpc_config* cfg, const char* dir) {
  if (!cfg) return null_arg("cfg");
  if (!dir || !*dir) return null_arg("dir");
  return guarded([&] {
    cfg->cfg.output_dir = dir;
    return KDPC_OK;
  });
}

const char* kdpc_config_output(const kdpc_config* cfg) {
  return cfg ? cfg->cfg.output_dir.c_str() : "";
}

kdpc_status kdpc_config_to_yaml(const kdpc_config* cfg, char* buffer, size_t capacity,
                                size_t* needed) {
  if (!cfg) return null_arg("cfg");
  return guarded([&] {
    const std::string y = kdpc::to_yaml(cfg->cfg);
    if (needed) *needed = y.size() + 1;
    if (buffer && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, y.size());
      std::memcpy(buffer, y.data(), n);
      buffer[n] = '\0';
    }
    return KDPC_OK;
  });
}

void kdpc_config_free(kdpc_config* cfg) { delete cfg; }

kdpc_status kdpc_collect(const kdpc_config* cfg, const char* out_dir) {
  if (!cfg) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    LineSink sink;
    std::ostream log(&sink);
    kdpc::run_collect(cfg->cfg, out_dir, log);
    return KDPC_OK;
  });
}

kdpc_status kdpc_fit(const kdpc_config* cfg, const char* dataset_dir, const char* out_dir) {
  if (!cfg) return null_arg("cfg");
  if (!dataset_dir) return null_arg("dataset_dir");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    LineSink sink;
    std::ostream log(&sink);
    kdpc::run_fit(cfg->cfg, dataset_dir, out_dir, log);
    return KDPC_OK;
  });
}

namespace {

kdpc_status divergence_status(const kdpc::RunSummary& s) {
  if (!s.diverged) return KDPC_OK;
  last_error = "closed loop diverged in:";
  for (const auto& sc : s.scenarios) {
    for (const auto& c : sc.controllers) {
      if (c.diverged) last_error += " " + sc.name + "/" + std::string(kdpc::to_string(c.kind));
    }
  }
  return KDPC_ERR_DIVERGED;
}

}  // namespace

kdpc_status kdpc_run(const kdpc_config* cfg, const char* predictors_dir, const char* out_dir,
                     int parallel) {
  if (!cfg) return null_arg("cfg");
  if (!predictors_dir) return null_arg("predictors_dir");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    LineSink sink;
    std::ostream log(&sink);
    return divergence_status(
        kdpc::run_scenarios(cfg->cfg, predictors_dir, out_dir, parallel != 0, log));
  });
}

kdpc_status kdpc_run_all(const kdpc_config* cfg, const char* out_dir, int parallel) {
  if (!cfg) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    LineSink sink;
    std::ostream log(&sink);
    return divergence_status(kdpc::run_all(cfg->cfg, out_dir, parallel != 0, log));
  });
}

kdpc_status kdpc_predictors_load(const char* dir, kdpc_predictors** out) {
  if (!dir) return null_arg("dir");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto p = std::make_shared<const kdpc::Predictors>(kdpc::load_predictors(dir));
    *out = new kdpc_predictors{std::move(p)};
    return KDPC_OK;
  });
}

kdpc_status kdpc_predictors_dims(const kdpc_predictors* p, size_t* t_ini, size_t* n_horizon,
                                 size_t* columns) {
  if (!p) return null_arg("p");
  if (t_ini) *t_ini = static_cast<size_t>(p->p->t_ini);
  if (n_horizon) *n_horizon = static_cast<size_t>(p->p->n_horizon);
  if (columns) *columns = static_cast<size_t>(p->p->p1.cols());
  return KDPC_OK;
}

kdpc_status kdpc_predict(const kdpc_predictors* p, const double* z_ini, const double* du,
                         double* y_out) {
  if (!p) return null_arg("p");
  if (!z_ini) return null_arg("z_ini");
  if (!du) return null_arg("du");
  if (!y_out) return null_arg("y_out");
  return guarded([&] {
    const auto& pr = *p->p;
    const Eigen::Map<const Eigen::VectorXd> z(z_ini, 2 * pr.t_ini);
    const Eigen::Map<const Eigen::VectorXd> d(du, pr.n_horizon);
    Eigen::Map<Eigen::VectorXd>(y_out, pr.n_horizon) =
        kdpc::predict(pr, kdpc::past_similarity(pr, z), d);
    return KDPC_OK;
  });
}

void kdpc_predictors_free(kdpc_predictors* p) { delete p; }

kdpc_status kdpc_controller_create(const kdpc_predictors* p, const kdpc_config* cfg, double u_init,
                                   kdpc_controller** out) {
  if (!p) return null_arg("p");
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto& s = cfg->cfg.experiment;
    *out = new kdpc_controller{kdpc::KdpcController(p->p, s.kdpc, s.qp, u_init)};
    return KDPC_OK;
  });
}

kdpc_status kdpc_controller_step(kdpc_controller* c, double y_k, const double* y_ref,
                                 double* u_out, kdpc_step_status* status_out) {
  if (!c) return null_arg("c");
  if (!y_ref) return null_arg("y_ref");
  return guarded([&] {
    const Eigen::Map<const Eigen::VectorXd> r(y_ref, c->ctrl.config().n_horizon);
    const kdpc::StepRecord rec = c->ctrl.step(y_k, r);
    if (u_out) *u_out = rec.u_applied;
    if (status_out) *status_out = static_cast<kdpc_step_status>(rec.status);
    return KDPC_OK;
  });
}

void kdpc_controller_free(kdpc_controller* c) { delete c; }

kdpc_status kdpc_qp_solve(size_t n, size_t m, const double* h, const double* g, const double* a,
                          const double* b, const double* lb, const double* ub, double tol,
                          size_t max_iter, double* z_out, double* objective_out,
                          kdpc_qp_status* status_out) {
  if (n == 0) {
    last_error = "qp: n must be positive";
    return KDPC_ERR_INVALID_ARGUMENT;
  }
  if (!h) return null_arg("h");
  if (!g) return null_arg("g");
  if (m > 0 && (!a || !b)) return null_arg("a/b");
  if (!z_out) return null_arg("z_out");
  return guarded([&] {
    const auto ni = static_cast<Eigen::Index>(n);
    const auto mi = static_cast<Eigen::Index>(m);
    const double inf = std::numeric_limits<double>::infinity();
    kdpc::QPProblem p;
    p.h = Eigen::Map<const Eigen::MatrixXd>(h, ni, ni);
    p.g = Eigen::Map<const Eigen::VectorXd>(g, ni);
    p.a_ineq = mi > 0 ? Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(a, mi, ni))
                      : Eigen::MatrixXd(0, ni);
    p.b_ineq = mi > 0 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(b, mi))
                      : Eigen::VectorXd(0);
    p.lb = lb ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(lb, ni))
              : Eigen::VectorXd::Constant(ni, -inf);
    p.ub = ub ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(ub, ni))
              : Eigen::VectorXd::Constant(ni, inf);
    const kdpc::QPSolution s =
        kdpc::solve_qp(p, tol > 0.0 ? tol : 1e-8, max_iter > 0 ? max_iter : 20000);
    Eigen::Map<Eigen::VectorXd>(z_out, ni) = s.z;
    if (objective_out) *objective_out = s.objective;
    if (status_out) *status_out = static_cast<kdpc_qp_status>(s.status);
    return KDPC_OK;
  });
}

}  // extern "C"
