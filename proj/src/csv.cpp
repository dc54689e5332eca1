#include "pricing/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "pricing/segmenter.hpp"

namespace pricing {

Dataset LoanTable::to_dataset() const {
  Dataset ds(dim());
  Vector z(dim() - 1);
  for (long i = 0; i < n(); ++i) {
    z[0] = 1.0;
    for (int j = 0; j < Z.cols(); ++j) z[j + 1] = Z(i, j);
    ds.append(z, price[size_t(i)], y[size_t(i)], i + 1);
  }
  return ds;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns)
    : out_(path), width_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path);
  out_ << "# schema: " << schema << "\n";
  for (size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::invalid_argument("csv row width");
  for (size_t i = 0; i < cells.size(); ++i)
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s, long line_no) {
  double v = 0.0;
  auto beg = s.data(), end = s.data() + s.size();
  while (beg < end && (*beg == ' ' || *beg == '\t')) ++beg;
  auto res = std::from_chars(beg, end, v);
  if (res.ec != std::errc() )
    throw std::runtime_error("bad numeric field '" + s + "' on line " +
                             std::to_string(line_no));
  return v;
}

long find_col(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : it - header.begin();
}

}  // namespace

LoanTable read_loan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  std::vector<std::string> header;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw std::runtime_error("empty csv: " + path);

  long apply_c = find_col(header, "apply");
  long price_c = find_col(header, "price");
  long pay_c = find_col(header, "monthly_payment");
  long term_c = find_col(header, "term");
  long amount_c = find_col(header, "amount");
  if (apply_c < 0) throw std::runtime_error("missing apply column");
  if (price_c < 0 && (pay_c < 0 || term_c < 0 || amount_c < 0))
    throw std::runtime_error(
        "need a price column or monthly_payment with term and amount");

  LoanTable t;
  std::vector<long> cov_cols;
  for (long j = 0; j < long(header.size()); ++j) {
    if (j == apply_c || j == price_c || j == pay_c) continue;
    cov_cols.push_back(j);
    t.cov_names.push_back(header[size_t(j)]);
  }

  std::vector<double> zflat;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error("ragged row on line " + std::to_string(line_no));
    double y = parse_num(cells[size_t(apply_c)], line_no);
    if (y != 0.0 && y != 1.0)
      throw std::runtime_error("apply must be 0/1 on line " + std::to_string(line_no));
    t.y.push_back(y);
    double p;
    if (price_c >= 0) {
      p = parse_num(cells[size_t(price_c)], line_no);
    } else {
      double pay = parse_num(cells[size_t(pay_c)], line_no);
      long term = std::lround(parse_num(cells[size_t(term_c)], line_no));
      double amount = parse_num(cells[size_t(amount_c)], line_no);
      p = loan_price(pay, int(term), amount);
    }
    t.price.push_back(p);
    for (long j : cov_cols) zflat.push_back(parse_num(cells[size_t(j)], line_no));
  }

  long n = long(t.y.size());
  long k = long(cov_cols.size());
  t.Z.resize(n, k);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < k; ++j) t.Z(i, j) = zflat[size_t(i * k + j)];
  return t;
}

void write_loan_csv(const std::string& path, const LoanTable& table,
                    bool as_npv) {
  long term_j = -1, amount_j = -1;
  for (size_t j = 0; j < table.cov_names.size(); ++j) {
    if (table.cov_names[j] == "term") term_j = long(j);
    if (table.cov_names[j] == "amount") amount_j = long(j);
  }
  if (as_npv && (term_j < 0 || amount_j < 0))
    throw std::invalid_argument("as_npv needs term and amount covariates");

  std::vector<std::string> cols{"apply", as_npv ? "monthly_payment" : "price"};
  cols.insert(cols.end(), table.cov_names.begin(), table.cov_names.end());
  CsvWriter w(path, "loan v1", cols);

  std::vector<std::string> cells(cols.size());
  for (long i = 0; i < table.n(); ++i) {
    cells[0] = format_double(table.y[size_t(i)]);
    if (as_npv) {
      int term = int(std::lround(table.Z(i, term_j)));
      double amount = table.Z(i, amount_j);
      // invert the NPV relation so the reader recovers this exact price
      double annuity = (1.0 - std::pow(1.0012, -double(term))) / 0.0012;
      cells[1] = format_double((table.price[size_t(i)] + amount) / annuity);
    } else {
      cells[1] = format_double(table.price[size_t(i)]);
    }
    for (long j = 0; j < table.Z.cols(); ++j)
      cells[size_t(2 + j)] = format_double(table.Z(i, j));
    w.row(cells);
  }
}

}  // namespace pricing
