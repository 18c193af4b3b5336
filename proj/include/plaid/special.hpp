#pragma once

namespace plaid {

// Gauss series 2F1(a, b; c; z) for the terminating case: at least one of a, b
// must be a nonpositive integer (within 1e-9 of one).  Evaluated as the exact
// finite sum with the stable term recursion
//   t_{l+1} = t_l * (a+l)(b+l) z / ((c+l)(l+1)).
// Throws std::invalid_argument if neither slot terminates the series or if
// c hits a nonpositive integer before termination.
double hyp2f1_terminating(double a, double b, double c, double z);

double log_beta(double a, double b);

double normal_cdf(double z);

// log(1 - Phi(z)); erfc-based in the body, asymptotic expansion deep in the
// upper tail where erfc underflows.
double log_normal_sf(double z);

// log( Phi((hi-mu)/sd) - Phi((lo-mu)/sd) ); lo/hi may be +-infinity.
// Stable when the whole window sits far out in either tail.
double log_normal_interval(double lo, double hi, double mu, double sd);

double log_normal_pdf(double x, double mu, double var);

// shape/rate parameterization, mean = shape/rate
double log_gamma_pdf(double x, double shape, double rate);

double log_beta_pdf(double x, double a, double b);

// log(exp(x) - exp(y)) for x >= y; returns -inf when x == y == -inf.
double log_sub_exp(double x, double y);

} // namespace plaid
