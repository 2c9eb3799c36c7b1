#include "lqr/builtins.h"

#include <sstream>

#include "lqr/errors.h"

namespace lqr {

Plant builtin_plant(const std::string& name, double a) {
  if (name == "single-integrator") {
    MatrixXd A(1, 1), B(1, 1), I(1, 1);
    A << 0.0;
    B << 0.5;
    I << 1.0;
    VectorXd x0(1);
    x0 << 1.0;
    return make_plant(A, B, I, I, I, {}, x0);
  }
  if (name == "coupled-pair") {
    MatrixXd A(2, 2), B(2, 1), W(2, 2);
    A << -1.0, a, a, -1.0;
    B << 1.0, 1.0;
    W << 1.0, -1.0, -1.0, 1.0;
    return make_plant(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), W);
  }
  if (name == "stiff-pair") {
    MatrixXd A(2, 2), B(2, 1);
    A << -10.0, 0.1, 0.1, -1.0;
    B << 1.0, 1.0;
    const MatrixXd W = B * B.transpose();
    return make_plant(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), W, B);
  }
  if (name == "unit-integrator") {
    MatrixXd A(1, 1), B(1, 1), I(1, 1);
    A << 0.0;
    B << 1.0;
    I << 1.0;
    VectorXd x0(1);
    x0 << 1.0;
    return make_plant(A, B, I, I, I, {}, x0);
  }
  std::ostringstream os;
  os << "unknown builtin instance \"" << name << "\" (available:";
  for (const auto& known : builtin_names()) os << " " << known;
  os << ")";
  throw Error(os.str());
}

std::vector<std::string> builtin_names() {
  return {"single-integrator", "coupled-pair", "stiff-pair", "unit-integrator"};
}

}  // namespace lqr
