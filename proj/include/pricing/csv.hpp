#pragma once
#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "pricing/dataset.hpp"

namespace pricing {

// Loan-application table: one row per applicant with y = apply (0/1), a
// posted price, and named covariates (no intercept column).
struct LoanTable {
  std::vector<std::string> cov_names;
  Eigen::MatrixXd Z;  // n x cov_names.size(), column order as in cov_names
  std::vector<double> y, price;

  long n() const { return long(y.size()); }
  int dim() const { return int(cov_names.size()) + 2; }  // (1, covs..., p)
  Dataset to_dataset() const;
};

// Reads a loan CSV. Required column: apply (0/1). Price comes either from a
// `price` column or is derived as net present value minus principal from the
// triple (monthly_payment, term, amount). Every other column is a covariate.
// Lines starting with '#' are skipped; fields are plain unquoted numbers.
LoanTable read_loan_csv(const std::string& path);

// Writes a loan table. With as_npv set (requires term and amount columns)
// the price column is replaced by the equivalent monthly_payment so that
// readers exercise the net-present-value path.
void write_loan_csv(const std::string& path, const LoanTable& table,
                    bool as_npv);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Harness CSV emitter: a versioned schema comment line, a header row, then
// caller-formatted cells.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  size_t width_;
};

}  // namespace pricing
