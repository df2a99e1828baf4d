/*
 * Copyright 2026 The geoqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Okapi BM25 over a small document collection (table captions).

#include <string>
#include <string_view>
#include <vector>

namespace geoqa {

// Lowercased ASCII alphanumeric runs; CJK runs become overlapping character
// bigrams (a lone CJK character stays a unigram). Everything else separates.
std::vector<std::string> bm25_tokenize(std::string_view text);

struct Bm25Hit {
    std::size_t index = 0;
    double score = 0.0;
};

class Bm25Index {
public:
    explicit Bm25Index(std::vector<std::string> documents, double k1 = 1.2, double b = 0.75);

    // idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); repeated query terms count once.
    std::vector<double> scores(std::string_view query) const;
    // Best first; equal scores ordered by document text, then index.
    std::vector<Bm25Hit> top_k(std::string_view query, std::size_t k = 1) const;

    const std::vector<std::string>& documents() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    double idf(const std::string& term) const;
    double average_length() const { return avgdl_; }

private:
    std::vector<std::string> docs_;
    std::vector<std::vector<std::string>> tokens_;
    double k1_, b_, avgdl_ = 0.0;
};

}  // namespace geoqa
