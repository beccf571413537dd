#include "contpol/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "contpol/errors.hpp"

namespace contpol {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::string row_tag(std::size_t row) { return "row " + std::to_string(row); }

}  // namespace

Dataset::Dataset(std::vector<double> y, std::vector<double> t, std::vector<double> x,
                 std::size_t d_x)
    : y_(std::move(y)), t_(std::move(t)), x_(std::move(x)), d_x_(d_x) {
  if (d_x_ == 0) throw Error(Errc::DimensionMismatch, "covariate dimension must be >= 1");
  if (t_.size() != y_.size() || x_.size() != y_.size() * d_x_)
    throw Error(Errc::DimensionMismatch, "column lengths disagree");
  for (std::size_t i = 0; i < y_.size(); ++i) {
    bool ok = std::isfinite(y_[i]) && std::isfinite(t_[i]);
    for (std::size_t p = 0; p < d_x_; ++p) ok = ok && std::isfinite(x_[i * d_x_ + p]);
    if (!ok) throw Error(Errc::NonFiniteValue, row_tag(i + 1));
  }
  refresh_summaries();
  x_scale_.resize(d_x_);
  for (std::size_t p = 0; p < d_x_; ++p) {
    double lo = 0.0, hi = 1.0;
    if (!y_.empty()) {
      lo = hi = x_[p];
      for (std::size_t i = 0; i < y_.size(); ++i) {
        lo = std::min(lo, x_[i * d_x_ + p]);
        hi = std::max(hi, x_[i * d_x_ + p]);
      }
    }
    x_scale_[p] = {lo, hi};
  }
}

Dataset Dataset::from_observations(std::span<const Observation> rows, std::size_t d_x) {
  std::vector<double> y, t, x;
  y.reserve(rows.size());
  t.reserve(rows.size());
  x.reserve(rows.size() * d_x);
  for (const auto& r : rows) {
    if (r.x.size() != d_x) throw Error(Errc::DimensionMismatch, "observation covariate length");
    y.push_back(r.y);
    t.push_back(r.t);
    x.insert(x.end(), r.x.begin(), r.x.end());
  }
  return Dataset(std::move(y), std::move(t), std::move(x), d_x);
}

void Dataset::refresh_summaries() {
  if (t_.empty()) {
    t_lo_ = t_hi_ = m_bound_ = 0.0;
    return;
  }
  const auto [lo, hi] = std::minmax_element(t_.begin(), t_.end());
  t_lo_ = *lo;
  t_hi_ = *hi;
  m_bound_ = 0.0;
  for (double v : y_) m_bound_ = std::max(m_bound_, std::fabs(v));
}

Observation Dataset::observation(std::size_t i) const {
  auto xi = x(i);
  return {y_[i], t_[i], std::vector<double>(xi.begin(), xi.end())};
}

std::vector<double> Dataset::raw_x(std::size_t i) const {
  auto xi = x(i);
  std::vector<double> out(xi.begin(), xi.end());
  if (rescaled_)
    for (std::size_t p = 0; p < d_x_; ++p)
      out[p] = x_scale_[p].lo + (x_scale_[p].hi - x_scale_[p].lo) * out[p];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.d_x_ = d_x_;
  out.y_.reserve(rows.size());
  out.t_.reserve(rows.size());
  out.x_.reserve(rows.size() * d_x_);
  for (std::size_t r : rows) {
    if (r >= size()) throw Error(Errc::InvalidArgument, "subset row out of range");
    out.y_.push_back(y_[r]);
    out.t_.push_back(t_[r]);
    auto xr = x(r);
    out.x_.insert(out.x_.end(), xr.begin(), xr.end());
  }
  out.refresh_summaries();
  out.x_scale_ = x_scale_;
  out.rescaled_ = rescaled_;
  return out;
}

Dataset parse_csv(const std::string& text, std::size_t d_x, std::size_t min_rows) {
  if (d_x == 0) throw Error(Errc::InvalidArgument, "d_x must be >= 1");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "empty file, no header");
  const auto header = split(line);
  std::vector<std::string> expected{"y", "t"};
  for (std::size_t p = 1; p <= d_x; ++p) expected.push_back("x" + std::to_string(p));
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (c >= header.size() || header[c] != expected[c])
      throw Error(Errc::MissingColumn, "expected column '" + expected[c] + "'");
  }
  if (header.size() != expected.size())
    throw Error(Errc::MissingColumn,
                "header has " + std::to_string(header.size()) + " columns, expected " +
                    std::to_string(expected.size()));

  std::vector<double> y, t, x;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split(line);
    if (fields.size() != expected.size())
      throw Error(Errc::MissingColumn, row_tag(row) + " has " + std::to_string(fields.size()) +
                                           " fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      std::string_view f = fields[c];
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw Error(Errc::NonFiniteValue, row_tag(row));
      if (c == 0) y.push_back(v);
      else if (c == 1) t.push_back(v);
      else x.push_back(v);
    }
  }
  if (y.size() < min_rows)
    throw Error(Errc::TooFewRows,
                std::to_string(y.size()) + " rows, need " + std::to_string(min_rows));
  Dataset ds(std::move(y), std::move(t), std::move(x), d_x);
  for (std::size_t p = 0; p < d_x; ++p)
    if (!(ds.x_scale()[p].hi > ds.x_scale()[p].lo))
      throw Error(Errc::ConstantCovariate, "x" + std::to_string(p + 1));
  return ds;
}

Dataset load_csv(const std::string& path, std::size_t d_x, std::size_t min_rows) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  if (f.bad()) throw Error(Errc::IoError, "read failed for " + path);
  return parse_csv(buf.str(), d_x, min_rows);
}

std::string to_csv(const Dataset& ds) {
  std::string out = "y,t";
  for (std::size_t p = 1; p <= ds.d_x(); ++p) out += ",x" + std::to_string(p);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.y()[i]);
    out += buf;
    std::snprintf(buf, sizeof buf, ",%.17g", ds.t()[i]);
    out += buf;
    for (double v : ds.raw_x(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Dataset rescale_covariates(const Dataset& ds) {
  Dataset out = ds;
  const std::size_t d = ds.d_x();
  for (std::size_t p = 0; p < d; ++p) {
    double lo = 0.0, hi = 0.0;
    if (ds.size() > 0) {
      lo = hi = ds.x_[p];
      for (std::size_t i = 0; i < ds.size(); ++i) {
        lo = std::min(lo, ds.x_[i * d + p]);
        hi = std::max(hi, ds.x_[i * d + p]);
      }
    }
    if (!(hi > lo)) throw Error(Errc::ConstantCovariate, "x" + std::to_string(p + 1));
    const bool identity = lo == 0.0 && hi == 1.0;
    if (!identity) {
      const double width = hi - lo;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        double& v = out.x_[i * d + p];
        v = std::clamp((v - lo) / width, 0.0, 1.0);
      }
    }
    if (ds.rescaled_) {
      const CovariateScale old = ds.x_scale_[p];
      const double span = old.hi - old.lo;
      out.x_scale_[p] = {old.lo + span * lo, old.lo + span * hi};
    } else {
      out.x_scale_[p] = {lo, hi};
    }
  }
  out.rescaled_ = true;
  return out;
}

std::vector<double> apply_scale(std::span<const double> raw_x,
                                std::span<const CovariateScale> scale) {
  if (raw_x.size() != scale.size())
    throw Error(Errc::DimensionMismatch, "covariate length differs from scale length");
  std::vector<double> out(raw_x.size());
  for (std::size_t p = 0; p < raw_x.size(); ++p)
    out[p] = (raw_x[p] - scale[p].lo) / (scale[p].hi - scale[p].lo);
  return out;
}

}  // namespace contpol
