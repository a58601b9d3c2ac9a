#pragma once

// The query record every module exchanges. Origin is ground truth that only
// the simulator and the evaluator may look at; anything playing adversary gets
// the stripped LogQuery view instead.

#include <string>
#include <utility>
#include <vector>

#include "chaff/text.hpp"

namespace chaff {

enum class QueryOrigin { user, decoy };

inline const char* origin_name(QueryOrigin o) { return o == QueryOrigin::user ? "user" : "decoy"; }

struct Query {
  std::string text;
  std::vector<std::string> terms;  // tokenized text, edge punctuation stripped
  std::string topic_id;            // "__unclassified__" when unknown
  double timestamp = 0.0;          // seconds since epoch
  QueryOrigin origin = QueryOrigin::user;

  static Query make(std::string text, std::string topic_id, double t, QueryOrigin origin) {
    Query q;
    q.terms = tokenize(text);
    q.text = std::move(text);
    q.topic_id = std::move(topic_id);
    q.timestamp = t;
    q.origin = origin;
    return q;
  }
};

}  // namespace chaff
