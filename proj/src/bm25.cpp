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

#include "geoqa/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace geoqa {

namespace {

// Decodes one UTF-8 sequence at i; invalid bytes decode as themselves.
char32_t decode(std::string_view s, std::size_t& i) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = c >= 0xF0 ? 3 : c >= 0xE0 ? 2 : c >= 0xC0 ? 1 : 0;
    if (extra && i + static_cast<std::size_t>(extra) >= s.size()) extra = 0;
    char32_t cp = extra == 0 ? c : extra == 1 ? (c & 0x1F) : extra == 2 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k <= extra; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x20000 && cp <= 0x2A6DF);
}

}  // namespace

std::vector<std::string> bm25_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    std::vector<std::string> cjk;
    auto flush_word = [&] {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
    };
    auto flush_cjk = [&] {
        if (cjk.size() == 1) out.push_back(cjk[0]);
        for (std::size_t k = 1; k < cjk.size(); ++k) out.push_back(cjk[k - 1] + cjk[k]);
        cjk.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = decode(text, i);
        if (cp < 0x80 && std::isalnum(static_cast<int>(cp))) {
            flush_cjk();
            word += static_cast<char>(std::tolower(static_cast<int>(cp)));
        } else if (is_cjk(cp)) {
            flush_word();
            cjk.emplace_back(text.substr(start, i - start));
        } else {
            flush_word();
            flush_cjk();
        }
    }
    flush_word();
    flush_cjk();
    return out;
}

Bm25Index::Bm25Index(std::vector<std::string> documents, double k1, double b)
    : docs_(std::move(documents)), k1_(k1), b_(b) {
    if (docs_.empty()) throw std::invalid_argument("BM25 index needs at least one document");
    double total = 0;
    for (const auto& d : docs_) {
        tokens_.push_back(bm25_tokenize(d));
        total += static_cast<double>(tokens_.back().size());
    }
    avgdl_ = total / static_cast<double>(docs_.size());
}

double Bm25Index::idf(const std::string& term) const {
    double df = 0;
    for (const auto& toks : tokens_) df += std::find(toks.begin(), toks.end(), term) != toks.end() ? 1 : 0;
    const double n = static_cast<double>(docs_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
    auto q = bm25_tokenize(query);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    std::vector<double> out(docs_.size(), 0.0);
    for (const auto& term : q) {
        const double w = idf(term);
        for (std::size_t d = 0; d < docs_.size(); ++d) {
            const double tf = static_cast<double>(std::count(tokens_[d].begin(), tokens_[d].end(), term));
            if (tf == 0) continue;
            const double len = static_cast<double>(tokens_[d].size());
            const double norm = avgdl_ > 0 ? len / avgdl_ : 0.0;
            out[d] += w * tf * (k1_ + 1) / (tf + k1_ * (1 - b_ + b_ * norm));
        }
    }
    return out;
}

std::vector<Bm25Hit> Bm25Index::top_k(std::string_view query, std::size_t k) const {
    const auto s = scores(query);
    std::vector<Bm25Hit> hits;
    for (std::size_t i = 0; i < s.size(); ++i) hits.push_back({i, s[i]});
    std::sort(hits.begin(), hits.end(), [&](const Bm25Hit& a, const Bm25Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (docs_[a.index] != docs_[b.index]) return docs_[a.index] < docs_[b.index];
        return a.index < b.index;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace geoqa
