#include <Eigen/QR>

#include "blinddf/adaptrx.hpp"

namespace blinddf::adaptrx {

ProjectionOperator make_projection(const RMat& C) {
  if (C.cols() == 0 || C.rows() < C.cols()) {
    throw NumericError("make_projection: constraint matrix must be tall with at least one column");
  }
  Eigen::ColPivHouseholderQR<RMat> qr(C);
  qr.setThreshold(1e-10);
  if (qr.rank() < C.cols()) {
    throw NumericError("make_projection: constraint matrix is rank deficient (rank " +
                       std::to_string(qr.rank()) + " of " + std::to_string(C.cols()) + ")");
  }
  const RMat gram = C.transpose() * C;
  const RMat gram_inv = gram.llt().solve(RMat::Identity(C.cols(), C.cols()));
  ProjectionOperator op;
  op.anchor = C * gram_inv;
  op.P = RMat::Identity(C.rows(), C.rows()) - op.anchor * C.transpose();
  op.P = (0.5 * (op.P + op.P.transpose())).eval();
  return op;
}

}  // namespace blinddf::adaptrx
