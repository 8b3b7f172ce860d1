#include "prefaudit/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "prefaudit/csv.hpp"

namespace prefaudit::visibility {

void validate(const KeywordRankRecord& record) {
  if (record.rank < 1)
    throw ValidationError("rank must be >= 1 (keyword '" + record.keyword_id + "', offer '" +
                          record.offer_id + "')");
  if (!std::isfinite(record.query_volume) || record.query_volume < 0.0)
    throw ValidationError("query volume must be a non-negative number (keyword '" +
                          record.keyword_id + "')");
}

// ---------------------------------------------------------------------------
// EcpCurve

void EcpCurve::check_table(const std::vector<double>& probs) {
  std::vector<RowDiagnostic> diags;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double p = probs[r];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      diags.push_back({0, "rank " + std::to_string(r + 1), "click probability outside [0,1]"});
    else if (r > 0 && p > probs[r - 1])
      diags.push_back({0, "rank " + std::to_string(r + 1),
                       "click probability increases with rank"});
  }
  if (!diags.empty()) throw ValidationError("invalid ECP curve", std::move(diags));
}

EcpCurve::EcpCurve(std::vector<double> probs) : probs_(std::move(probs)) {
  check_table(probs_);
}

EcpCurve EcpCurve::geometric_default() {
  std::vector<double> p(100);
  double v = 0.30;
  for (auto& x : p) {
    x = v;
    v *= 0.85;
  }
  return EcpCurve(std::move(p));
}

EcpCurve EcpCurve::parse_csv(std::string_view text) {
  const auto table = csv::Table::parse(text);
  table.require_columns({"rank", "click_prob"});
  const std::size_t rc = *table.column("rank");
  const std::size_t pc = *table.column("click_prob");

  std::vector<std::pair<long long, double>> entries;
  std::vector<RowDiagnostic> diags;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& row = table.row(i);
    auto r = csv::to_int(row[rc]);
    auto p = csv::to_double(row[pc]);
    if (!r || *r < 1) diags.push_back({table.line_of(i), "rank", "not a positive integer"});
    if (!p) diags.push_back({table.line_of(i), "click_prob", "not a number"});
    if (r && p) entries.emplace_back(*r, *p);
  }
  if (!diags.empty()) throw ValidationError("invalid ECP file", std::move(diags));

  std::sort(entries.begin(), entries.end());
  std::vector<double> probs;
  probs.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != static_cast<long long>(i + 1))
      throw ValidationError("ECP ranks must run 1..n without gaps or duplicates (problem at rank " +
                            std::to_string(entries[i].first) + ")");
    probs.push_back(entries[i].second);
  }
  if (probs.empty()) throw ValidationError("ECP file has no entries");
  return EcpCurve(std::move(probs));
}

EcpCurve EcpCurve::load_csv(const std::string& path) { return parse_csv(read_file(path)); }

void EcpCurve::add_variant(const std::string& keyword_class, std::vector<double> probs) {
  check_table(probs);
  variants_[keyword_class] = std::move(probs);
}

namespace {
double lookup(const std::vector<double>& probs, int rank) {
  if (rank < 1) throw ValidationError("rank must be >= 1");
  const auto idx = static_cast<std::size_t>(rank - 1);
  return idx < probs.size() ? probs[idx] : 0.0;
}
}  // namespace

double EcpCurve::probability(int rank) const { return lookup(probs_, rank); }

double EcpCurve::probability(int rank, const std::string& keyword_class) const {
  if (auto it = variants_.find(keyword_class); it != variants_.end())
    return lookup(it->second, rank);
  return lookup(probs_, rank);
}

// ---------------------------------------------------------------------------
// Elementary operations

double raw_keyword_visibility(const KeywordRankRecord& record, const EcpCurve& curve) {
  validate(record);
  return record.query_volume * curve.probability(record.rank);
}

double seasonal_volume(std::span<const double> volumes, std::size_t focal,
                       std::size_t cycle_length) {
  if (cycle_length == 0) throw invalid_argument("cycle length must be positive");
  if (volumes.empty() || focal >= volumes.size())
    throw invalid_argument("seasonal window is empty");
  const std::size_t first = focal + 1 >= cycle_length ? focal + 1 - cycle_length : 0;
  double sum = 0.0;
  for (std::size_t i = first; i <= focal; ++i) sum += volumes[i];
  return sum / static_cast<double>(focal - first + 1);
}

std::vector<double> seasonal_volume(std::span<const double> volumes, std::size_t cycle_length) {
  std::vector<double> out(volumes.size());
  for (std::size_t t = 0; t < volumes.size(); ++t)
    out[t] = seasonal_volume(volumes, t, cycle_length);
  return out;
}

double keyword_visibility_index(const KeywordRankRecord& record, double seasonal,
                                const EcpCurve& curve) {
  validate(record);
  if (!std::isfinite(seasonal) || seasonal < 0.0)
    throw ValidationError("seasonal volume must be non-negative");
  return seasonal * curve.probability(record.rank);
}

double aggregate_visibility(std::span<const double> per_keyword) {
  double sum = 0.0;
  for (double v : per_keyword) sum += v;
  return sum;
}

std::map<std::string, double> relative_visibility(const std::map<std::string, double>& index,
                                                  double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw invalid_argument("visibility scale must be positive");
  double total = 0.0;
  for (const auto& [offer, v] : index) {
    if (!(v >= 0.0)) throw ValidationError("visibility of offer '" + offer + "' is negative");
    total += v;
  }
  if (!(total > 0.0))
    throw ValidationError("relative visibility undefined: every offer has zero visibility");
  std::map<std::string, double> out;
  for (const auto& [offer, v] : index) out.emplace(offer, v / total * scale);
  return out;
}

// ---------------------------------------------------------------------------
// File input

std::vector<KeywordRankRecord> collapse_to_daily(std::vector<TimedRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const TimedRecord& a, const TimedRecord& b) {
    return std::tie(a.record.keyword_id, a.record.period, a.record.offer_id, a.seconds_of_day) <
           std::tie(b.record.keyword_id, b.record.period, b.record.offer_id, b.seconds_of_day);
  });
  std::vector<KeywordRankRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const bool last_of_day =
        i + 1 == records.size() || records[i + 1].record.keyword_id != r.record.keyword_id ||
        records[i + 1].record.period != r.record.period ||
        records[i + 1].record.offer_id != r.record.offer_id;
    if (!last_of_day && records[i + 1].seconds_of_day == r.seconds_of_day)
      throw ValidationError("duplicate record for keyword '" + r.record.keyword_id +
                            "', offer '" + r.record.offer_id + "' on " +
                            format_iso_date(r.record.period));
    if (last_of_day) out.push_back(r.record);
  }
  return out;
}

std::vector<KeywordRankRecord> parse_keyword_ranks(std::string_view text) {
  const auto table = csv::Table::parse(text);
  table.require_columns({"keyword_id", "date", "offer_id", "rank", "query_volume"});
  const std::size_t kc = *table.column("keyword_id"), dc = *table.column("date"),
                    oc = *table.column("offer_id"), rc = *table.column("rank"),
                    vc = *table.column("query_volume");
  std::vector<TimedRecord> timed;
  timed.reserve(table.rows());
  std::vector<RowDiagnostic> diags;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& row = table.row(i);
    const std::size_t line = table.line_of(i);
    TimedRecord tr;
    tr.record.keyword_id = row[kc];
    tr.record.offer_id = row[oc];
    if (row[kc].empty()) diags.push_back({line, "keyword_id", "empty identifier"});
    if (row[oc].empty()) diags.push_back({line, "offer_id", "empty identifier"});
    try {
      tr.record.period = parse_iso_date(row[dc], &tr.seconds_of_day);
    } catch (const Error& e) {
      diags.push_back({line, "date", e.what()});
    }
    auto rank = csv::to_int(row[rc]);
    if (!rank || *rank < 1 || *rank > 1'000'000'000)
      diags.push_back({line, "rank", "not a positive integer"});
    else
      tr.record.rank = static_cast<int>(*rank);
    auto vol = csv::to_double(row[vc]);
    if (!vol || *vol < 0.0)
      diags.push_back({line, "query_volume", "not a non-negative number"});
    else
      tr.record.query_volume = *vol;
    timed.push_back(std::move(tr));
  }
  if (!diags.empty()) throw ValidationError("invalid keyword rank file", std::move(diags));
  return collapse_to_daily(std::move(timed));
}

std::vector<KeywordRankRecord> load_keyword_ranks(const std::string& path) {
  return parse_keyword_ranks(read_file(path));
}

// ---------------------------------------------------------------------------
// Pipeline

VisibilityTable compute(std::span<const KeywordRankRecord> records, const EcpCurve& curve,
                        const Options& options) {
  if (options.cycle_length == 0) throw invalid_argument("cycle length must be positive");
  for (const auto& r : records) validate(r);

  // Order: keyword, period, offer.
  std::vector<const KeywordRankRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return std::tie(a->keyword_id, a->period, a->offer_id) <
           std::tie(b->keyword_id, b->period, b->offer_id);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto* a = sorted[i - 1];
    const auto* b = sorted[i];
    if (a->keyword_id == b->keyword_id && a->period == b->period) {
      if (a->offer_id == b->offer_id)
        throw ValidationError("duplicate record for keyword '" + a->keyword_id + "', offer '" +
                              a->offer_id + "' on " + format_iso_date(a->period));
      if (a->query_volume != b->query_volume)
        throw ValidationError("inconsistent query volume for keyword '" + a->keyword_id +
                              "' on " + format_iso_date(a->period));
    }
  }

  VisibilityTable out;
  out.cycle_length = options.cycle_length;
  out.scale = options.scale;

  // Seasonal volumes per keyword over the days it was observed.
  std::map<std::pair<std::string, Day>, double> seasonal_of;
  for (std::size_t i = 0; i < sorted.size();) {
    const std::string& kw = sorted[i]->keyword_id;
    std::vector<Day> days;
    std::vector<double> vols;
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j]->keyword_id == kw; ++j) {
      if (days.empty() || days.back() != sorted[j]->period) {
        days.push_back(sorted[j]->period);
        vols.push_back(sorted[j]->query_volume);
      }
    }
    const Day cycle = static_cast<Day>(std::min<std::size_t>(options.cycle_length, 1u << 30));
    for (std::size_t f = 0; f < days.size(); ++f) {
      std::size_t first = f;
      while (first > 0 && days[first - 1] > days[f] - cycle) --first;
      double sum = 0.0;
      for (std::size_t m = first; m <= f; ++m) sum += vols[m];
      KeywordPeriod kp;
      kp.keyword_id = kw;
      kp.period = days[f];
      kp.volume = vols[f];
      kp.window = f - first + 1;
      kp.seasonal = sum / static_cast<double>(kp.window);
      kp.partial = kp.window < options.cycle_length;
      if (kp.partial) ++out.partial_windows;
      seasonal_of[{kw, days[f]}] = kp.seasonal;
      out.seasonal.push_back(std::move(kp));
    }
    i = j;
  }

  // Keyword-level values, then aggregate per (period, offer) in keyword order.
  std::vector<KeywordOfferPeriod> kop;
  kop.reserve(sorted.size());
  for (const auto* r : sorted) {
    auto cls = options.keyword_classes.find(r->keyword_id);
    const double f = cls == options.keyword_classes.end()
                         ? curve.probability(r->rank)
                         : curve.probability(r->rank, cls->second);
    KeywordOfferPeriod k;
    k.keyword_id = r->keyword_id;
    k.offer_id = r->offer_id;
    k.period = r->period;
    k.raw = r->query_volume * f;
    k.index = seasonal_of.at({r->keyword_id, r->period}) * f;
    kop.push_back(std::move(k));
  }
  std::sort(kop.begin(), kop.end(), [](const auto& a, const auto& b) {
    return std::tie(a.period, a.offer_id, a.keyword_id) <
           std::tie(b.period, b.offer_id, b.keyword_id);
  });

  for (std::size_t i = 0; i < kop.size();) {
    const Day period = kop[i].period;
    std::map<std::string, double> index_of;
    std::size_t first_offer = out.offers.size();
    std::size_t j = i;
    while (j < kop.size() && kop[j].period == period) {
      OfferPeriod op;
      op.offer_id = kop[j].offer_id;
      op.period = period;
      std::size_t k = j;
      for (; k < kop.size() && kop[k].period == period && kop[k].offer_id == op.offer_id; ++k) {
        op.raw += kop[k].raw;
        op.index += kop[k].index;
      }
      index_of.emplace(op.offer_id, op.index);
      out.offers.push_back(std::move(op));
      j = k;
    }
    std::map<std::string, double> shares;
    try {
      shares = relative_visibility(index_of, options.scale);
    } catch (const ValidationError&) {
      throw ValidationError("relative visibility undefined on " + format_iso_date(period) +
                            ": every offer has zero visibility");
    }
    for (std::size_t o = first_offer; o < out.offers.size(); ++o)
      out.offers[o].relative = shares.at(out.offers[o].offer_id);
    i = j;
  }

  std::sort(kop.begin(), kop.end(), [](const auto& a, const auto& b) {
    return std::tie(a.period, a.keyword_id, a.offer_id) <
           std::tie(b.period, b.keyword_id, b.offer_id);
  });
  out.keywords = std::move(kop);
  return out;
}

std::string to_csv(const VisibilityTable& table) {
  std::ostringstream os;
  os << "offer_id,date,relative_visibility\n";
  for (const auto& o : table.offers)
    os << csv::escape(o.offer_id) << ',' << format_iso_date(o.period) << ','
       << csv::format_double(o.relative) << '\n';
  return os.str();
}

}  // namespace prefaudit::visibility
