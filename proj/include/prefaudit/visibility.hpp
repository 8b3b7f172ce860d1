#pragma once

// Platform-wide search visibility: keyword-level visibility weighted by
// query volume and expected click probability, seasonally smoothed over a
// trailing cycle, summed over keywords and expressed as a share of the
// total across offers.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefaudit/common.hpp"

namespace prefaudit::visibility {

struct KeywordRankRecord {
  std::string keyword_id;
  Day period = 0;
  std::string offer_id;
  int rank = 1;
  double query_volume = 0.0;
};

// Throws ValidationError for rank < 1 or a negative / non-finite volume.
void validate(const KeywordRankRecord& record);

// Rank -> expected click probability. Ranks past the last entry have
// probability 0. Variants keyed by a keyword class override the default
// table for keywords assigned to that class.
class EcpCurve {
 public:
  // probs[r-1] is the click probability at rank r. Must lie in [0,1] and be
  // non-increasing; violations throw ValidationError.
  explicit EcpCurve(std::vector<double> probs);

  // Geometric decay 0.30 * 0.85^(r-1) over ranks 1..100.
  static EcpCurve geometric_default();
  // Reads `rank,click_prob`; ranks must be 1..n without gaps (any order).
  static EcpCurve load_csv(const std::string& path);
  static EcpCurve parse_csv(std::string_view text);

  void add_variant(const std::string& keyword_class, std::vector<double> probs);

  double probability(int rank) const;
  double probability(int rank, const std::string& keyword_class) const;
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& table() const { return probs_; }

 private:
  static void check_table(const std::vector<double>& probs);

  std::vector<double> probs_;
  std::map<std::string, std::vector<double>> variants_;
};

// V_kit = N_kt * f(rank_kit).
double raw_keyword_visibility(const KeywordRankRecord& record, const EcpCurve& curve);

// Trailing mean of the last `cycle_length` entries ending at `focal`
// (inclusive). When fewer than cycle_length entries precede the focal index
// the mean runs over all available history.
double seasonal_volume(std::span<const double> volumes, std::size_t focal,
                       std::size_t cycle_length);
// Same, evaluated at every index.
std::vector<double> seasonal_volume(std::span<const double> volumes, std::size_t cycle_length);

// VI_kit = seasonal N_kt * f(rank_kit).
double keyword_visibility_index(const KeywordRankRecord& record, double seasonal,
                                const EcpCurve& curve);

// Sum over the keyword set, left to right.
double aggregate_visibility(std::span<const double> per_keyword);

// Shares of the period total, multiplied by `scale`. Throws
// ValidationError when every offer has zero visibility.
std::map<std::string, double> relative_visibility(const std::map<std::string, double>& index,
                                                  double scale = 1e6);

struct Options {
  std::size_t cycle_length = 365;
  double scale = 1e6;
  // keyword_id -> ECP variant class; keywords not listed use the default table.
  std::map<std::string, std::string> keyword_classes;
};

struct OfferPeriod {
  std::string offer_id;
  Day period = 0;
  double raw = 0.0;       // V_it
  double index = 0.0;     // VI_it
  double relative = 0.0;  // scaled share of VI_it in its period
};

struct KeywordOfferPeriod {
  std::string keyword_id;
  std::string offer_id;
  Day period = 0;
  double raw = 0.0;    // V_kit
  double index = 0.0;  // VI_kit
};

struct KeywordPeriod {
  std::string keyword_id;
  Day period = 0;
  double volume = 0.0;    // N_kt
  double seasonal = 0.0;  // seasonal N_kt
  std::size_t window = 0; // observations in the averaging window
  bool partial = false;   // window shorter than the cycle length
};

struct VisibilityTable {
  std::vector<OfferPeriod> offers;            // sorted by (period, offer_id)
  std::vector<KeywordOfferPeriod> keywords;   // sorted by (period, keyword_id, offer_id)
  std::vector<KeywordPeriod> seasonal;        // sorted by (keyword_id, period)
  std::size_t cycle_length = 0;
  double scale = 0.0;
  std::size_t partial_windows = 0;
};

// Days with several records for the same (keyword, offer) (intraday
// snapshots) keep the one with the latest time of day. Records carry a
// seconds-of-day stamp for that purpose.
struct TimedRecord {
  KeywordRankRecord record;
  int seconds_of_day = 0;
};
std::vector<KeywordRankRecord> collapse_to_daily(std::vector<TimedRecord> records);

// Reads `keyword_id,date,offer_id,rank,query_volume`, collapsing intraday
// snapshots to the last one of each day.
std::vector<KeywordRankRecord> load_keyword_ranks(const std::string& path);
std::vector<KeywordRankRecord> parse_keyword_ranks(std::string_view text);

// Full pipeline over a record set. A keyword's volume series covers the days
// it was observed; the seasonal window counts those days within the trailing
// cycle. Offers appear in the output for every period in which they were
// ranked for at least one keyword.
VisibilityTable compute(std::span<const KeywordRankRecord> records, const EcpCurve& curve,
                        const Options& options = {});

// `offer_id,date,relative_visibility`.
std::string to_csv(const VisibilityTable& table);

}  // namespace prefaudit::visibility
