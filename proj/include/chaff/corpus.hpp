#pragma once

// Feed ingestion and keyword-pool construction. Pools are the vocabularies the
// decoy generator samples from; they are built from capitalized words of feed
// titles (adjacent n-grams) or from TF-IDF-scored rare terms of a document set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaff/stats.hpp"
#include "chaff/text.hpp"
#include "chaff/timeutil.hpp"
#include "chaff/tsv.hpp"
#include "chaff/xml.hpp"

namespace chaff::corpus {

struct FeedItem {
  std::string feed_id;
  std::string title;
  std::string body;
  std::int64_t published_at = 0;  // seconds since epoch, 0 when the feed omits or mangles the date
};

enum class PoolSource { feed_extracted, tfidf_generated };

struct KeywordPool {
  std::string topic_id;
  std::vector<std::pair<std::string, double>> entries;  // sorted by term, weights sum to 1 when nonempty
  PoolSource source = PoolSource::feed_extracted;

  bool empty() const { return entries.empty(); }

  double weight_of(std::string_view term) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), term,
                               [](const auto& e, std::string_view t) { return e.first < t; });
    if (it != entries.end() && it->first == term) return it->second;
    return 0.0;
  }

  int max_term_words() const {
    int n = 0;
    for (auto& [t, w] : entries) {
      int words = 1;
      for (char c : t)
        if (c == ' ') ++words;
      n = std::max(n, words);
    }
    return n;
  }
};

using PoolSet = std::map<std::string, KeywordPool>;

class FeedFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline FeedItem item_from_rss(const xml::Node& item, std::string_view feed_id) {
  FeedItem out;
  out.feed_id = std::string(feed_id);
  if (auto* t = item.child("title")) out.title = trim(t->text);
  if (auto* d = item.child("description")) out.body = trim(d->text);
  if (auto* p = item.child("pubDate")) out.published_at = timeutil::parse_rfc822(trim(p->text));
  return out;
}

inline FeedItem item_from_atom(const xml::Node& entry, std::string_view feed_id) {
  FeedItem out;
  out.feed_id = std::string(feed_id);
  if (auto* t = entry.child("title")) out.title = trim(t->text);
  if (auto* s = entry.child("summary"))
    out.body = trim(s->text);
  else if (auto* c = entry.child("content"))
    out.body = trim(c->text);
  const xml::Node* when = entry.child("published");
  if (!when) when = entry.child("updated");
  if (when) {
    try {
      out.published_at = static_cast<std::int64_t>(timeutil::parse_iso8601(trim(when->text)));
    } catch (const std::invalid_argument&) {
      out.published_at = 0;
    }
  }
  return out;
}

}  // namespace detail

// RSS 2.0 (<rss><channel><item>...) and Atom (<feed><entry>...). Anything else
// is a FeedFormatError; malformed XML propagates as xml::ParseError.
inline std::vector<FeedItem> parse_feed(std::string_view raw, std::string_view feed_id) {
  xml::Node root = xml::parse(raw);
  std::string_view local = xml::Node::local_name(root.name);
  std::vector<FeedItem> items;
  if (local == "rss") {
    const xml::Node* channel = root.child("channel");
    if (!channel) throw FeedFormatError("rss feed without <channel>: " + std::string(feed_id));
    for (const xml::Node* item : channel->children_named("item")) {
      FeedItem fi = detail::item_from_rss(*item, feed_id);
      if (!fi.title.empty()) items.push_back(std::move(fi));
    }
  } else if (local == "feed") {
    for (const xml::Node* entry : root.children_named("entry")) {
      FeedItem fi = detail::item_from_atom(*entry, feed_id);
      if (!fi.title.empty()) items.push_back(std::move(fi));
    }
  } else if (local == "RDF") {
    throw FeedFormatError("unsupported feed dialect RSS 1.0/RDF in " + std::string(feed_id));
  } else {
    throw FeedFormatError("unsupported feed dialect <" + std::string(root.name) + "> in " +
                          std::string(feed_id));
  }
  return items;
}

inline bool contains_uppercase(std::string_view word) {
  for (std::size_t i = 0; i < word.size();) {
    Utf8Char c = decode_utf8(word, i);
    if (is_upper_cp(c.cp)) return true;
    i += static_cast<std::size_t>(c.len);
  }
  return false;
}

// Title words that carry at least one capital letter, edge punctuation
// stripped, original order kept. Sentence-initial capitals get no exemption.
inline std::vector<std::string> extract_keywords(const FeedItem& item) {
  std::vector<std::string> out;
  for (auto& word : split_words(item.title)) {
    std::string stripped = strip_edge_punct(word);
    if (!stripped.empty() && contains_uppercase(stripped)) out.push_back(std::move(stripped));
  }
  return out;
}

namespace detail {

inline KeywordPool pool_from_counts(std::map<std::string, double>&& counts, std::string topic_id,
                                    PoolSource source) {
  KeywordPool pool;
  pool.topic_id = std::move(topic_id);
  pool.source = source;
  double total = 0.0;
  for (auto& [t, c] : counts) total += c;
  if (total > 0.0) {
    pool.entries.reserve(counts.size());
    for (auto& [t, c] : counts) pool.entries.emplace_back(t, c / total);
  }
  return pool;  // map iteration is sorted by term already
}

}  // namespace detail

// All 1..max_ngram-grams over adjacent extracted keywords of each title,
// weighted by occurrence count and normalized.
inline KeywordPool build_pool(std::span<const FeedItem> items, std::string topic_id, int max_ngram) {
  if (max_ngram < 1) throw std::invalid_argument("build_pool: max_ngram must be >= 1");
  std::map<std::string, double> counts;
  for (const FeedItem& item : items) {
    std::vector<std::string> kws = extract_keywords(item);
    for (std::size_t i = 0; i < kws.size(); ++i) {
      std::string term;
      for (int n = 0; n < max_ngram && i + static_cast<std::size_t>(n) < kws.size(); ++n) {
        if (n) term += ' ';
        term += kws[i + static_cast<std::size_t>(n)];
        counts[term] += 1.0;
      }
    }
  }
  return detail::pool_from_counts(std::move(counts), std::move(topic_id), PoolSource::feed_extracted);
}

// TF raw count, IDF ln(N/df); keeps terms whose document frequency is at or
// below the rare_quantile nearest-rank quantile of all df values; weight
// proportional to TF*IDF. Terms in every document score zero and drop out.
inline KeywordPool build_tfidf_pool(std::span<const std::string> documents, std::string topic_name,
                                    double rare_quantile) {
  if (documents.empty()) throw std::invalid_argument("build_tfidf_pool: documents must be non-empty");
  if (!(rare_quantile > 0.0 && rare_quantile <= 1.0))
    throw std::invalid_argument("build_tfidf_pool: rare_quantile out of (0,1]");
  std::map<std::string, double> tf;
  std::map<std::string, double> df;
  for (const std::string& doc : documents) {
    std::map<std::string, int> in_doc;
    for (auto& tok : tokenize(doc)) {
      tf[tok] += 1.0;
      in_doc[tok] += 1;
    }
    for (auto& [t, c] : in_doc) df[t] += 1.0;
  }
  if (tf.empty())
    return detail::pool_from_counts({}, std::move(topic_name), PoolSource::tfidf_generated);
  std::vector<double> dfs;
  dfs.reserve(df.size());
  for (auto& [t, d] : df) dfs.push_back(d);
  double df_cut = stats::quantile_nearest_rank(dfs, rare_quantile);
  double n_docs = static_cast<double>(documents.size());
  std::map<std::string, double> scores;
  for (auto& [t, c] : tf) {
    double d = df[t];
    if (d > df_cut) continue;
    double score = c * std::log(n_docs / d);
    if (score > 0.0) scores[t] = score;
  }
  return detail::pool_from_counts(std::move(scores), std::move(topic_name), PoolSource::tfidf_generated);
}

// --- pool file IO: `term TAB weight TAB topic_id` ---

inline void write_pools(const std::string& path, const PoolSet& pools) {
  tsv::Document doc;
  doc.comments = {"# chaff keyword pools v1"};
  for (auto& [topic, pool] : pools)
    for (auto& [term, weight] : pool.entries)
      doc.rows.push_back({term, tsv::format_double(weight), topic});
  tsv::write_file(path, doc);
}

inline PoolSet read_pools(const std::string& path) {
  tsv::Document doc = tsv::read_file(path);
  std::map<std::string, std::map<std::string, double>> grouped;
  for (auto& row : doc.rows) {
    if (row.size() != 3) throw std::runtime_error("pool file " + path + ": expected 3 fields per record");
    grouped[row[2]][row[0]] = tsv::parse_double(row[1]);
  }
  PoolSet out;
  for (auto& [topic, terms] : grouped) {
    KeywordPool pool;
    pool.topic_id = topic;
    double total = 0.0;
    for (auto& [t, w] : terms) {
      if (w < 0.0) throw std::runtime_error("pool file " + path + ": negative weight for " + t);
      total += w;
    }
    // Renormalize only when the file is materially off; dividing weights that
    // already sum to 1 would perturb low bits and break round-trip stability.
    bool rescale = total > 0.0 && std::abs(total - 1.0) > 1e-9;
    for (auto& [t, w] : terms) pool.entries.emplace_back(t, rescale ? w / total : w);
    out.emplace(topic, std::move(pool));
  }
  return out;
}

}  // namespace chaff::corpus
