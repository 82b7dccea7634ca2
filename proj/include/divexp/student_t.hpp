#pragma once

namespace divexp::stats {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (modified Lentz) with relative tolerance well below 1e-10.
double incomplete_beta(double a, double b, double x);

double student_t_pdf(double t, double dof);
double student_t_cdf(double t, double dof);
/// P(T > t) without cancellation in the far tail.
double student_t_upper_tail(double t, double dof);
/// Inverse CDF; p in (0, 1).
double student_t_quantile(double p, double dof);

}  // namespace divexp::stats
