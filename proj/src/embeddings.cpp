#include "cohort/embeddings.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cohort {

void EmbeddingTable::add(std::string token, std::vector<float> vector) {
    if (vector.size() != dim_) {
        throw Error(ErrorKind::DimensionMismatch, fmt::format("'{}' has {} components, expected {}", token, vector.size(), dim_));
    }
    double norm = 0.0;
    for (float v : vector) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0 || !std::isfinite(norm)) throw Error(ErrorKind::ZeroVector, fmt::format("'{}' has a zero vector", token));
    for (float& v : vector) v = static_cast<float>(v / norm);
    if (index_.contains(token)) return;  // first occurrence wins
    index_.emplace(token, tokens_.size());
    tokens_.push_back(std::move(token));
    vectors_.push_back(std::move(vector));
}

const std::vector<float>* EmbeddingTable::find(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? nullptr : &vectors_[it->second];
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::optional<std::vector<float>> EmbeddingTable::vector_for(std::string_view term) const {
    const std::string phrase = normalize_phrase(term);
    if (const auto* v = find(phrase)) return *v;
    const auto words = split(phrase, ' ');
    if (words.size() < 2) return std::nullopt;
    std::string joined;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) joined.push_back(joiner_);
        joined += words[i];
    }
    if (const auto* v = find(joined)) return *v;

    std::vector<double> sum(dim_, 0.0);
    std::size_t known = 0;
    for (std::string_view w : words) {
        if (const auto* v = find(w)) {
            for (std::size_t i = 0; i < dim_; ++i) sum[i] += (*v)[i];
            ++known;
        }
    }
    if (known == 0) return std::nullopt;
    double norm = 0.0;
    for (double x : sum) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return std::nullopt;
    std::vector<float> mean(dim_);
    for (std::size_t i = 0; i < dim_; ++i) mean[i] = static_cast<float>(sum[i] / norm);
    return mean;
}

std::vector<std::pair<std::string, double>> EmbeddingTable::neighbors(std::string_view term, double threshold,
                                                                      std::size_t k_max) const {
    const auto query = vector_for(term);
    if (!query) throw Error(ErrorKind::UnknownTerm, fmt::format("no vector for '{}'", term));
    const std::string phrase = normalize_phrase(term);
    std::string joined = phrase;
    std::replace(joined.begin(), joined.end(), ' ', joiner_);

    std::vector<std::pair<std::string, double>> out;
    for (std::size_t r = 0; r < tokens_.size(); ++r) {
        if (tokens_[r] == phrase || tokens_[r] == joined) continue;
        double dot = 0.0;
        const auto& v = vectors_[r];
        for (std::size_t i = 0; i < dim_; ++i) dot += static_cast<double>((*query)[i]) * v[i];
        if (dot >= threshold) out.emplace_back(tokens_[r], dot);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > k_max) out.resize(k_max);
    return out;
}

namespace {

std::pair<std::size_t, std::size_t> parse_header(std::string_view line) {
    std::istringstream in{std::string(line)};
    long long vocab = -1, dim = -1;
    if (!(in >> vocab >> dim) || vocab < 0 || dim <= 0) {
        throw Error(ErrorKind::TruncatedFile, fmt::format("bad embedding header '{}'", line));
    }
    return {static_cast<std::size_t>(vocab), static_cast<std::size_t>(dim)};
}

}  // namespace

EmbeddingTable parse_text_embeddings(std::string_view content) {
    std::size_t pos = content.find('\n');
    if (pos == std::string_view::npos) throw Error(ErrorKind::TruncatedFile, "missing embedding header line");
    const auto [vocab, dim] = parse_header(content.substr(0, pos));
    EmbeddingTable table(dim);
    ++pos;
    std::size_t rows = 0;
    while (rows < vocab) {
        if (pos >= content.size()) {
            throw Error(ErrorKind::TruncatedFile, fmt::format("expected {} rows, found {}", vocab, rows));
        }
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string_view::npos) eol = content.size();
        const std::string_view line = trim(content.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) continue;
        std::istringstream in{std::string(line)};
        std::string token;
        in >> token;
        std::vector<float> values;
        std::string field;
        while (in >> field) {
            try {
                values.push_back(std::stof(field));
            } catch (const std::exception&) {
                throw Error(ErrorKind::DimensionMismatch, fmt::format("'{}': non-numeric component '{}'", token, field));
            }
        }
        table.add(std::move(token), std::move(values));
        ++rows;
    }
    return table;
}

EmbeddingTable parse_binary_embeddings(std::string_view content) {
    std::size_t pos = content.find('\n');
    if (pos == std::string_view::npos) throw Error(ErrorKind::TruncatedFile, "missing embedding header line");
    const auto [vocab, dim] = parse_header(content.substr(0, pos));
    EmbeddingTable table(dim);
    ++pos;
    for (std::size_t row = 0; row < vocab; ++row) {
        while (pos < content.size() && (content[pos] == '\n' || content[pos] == ' ')) ++pos;
        const std::size_t space = content.find(' ', pos);
        if (space == std::string_view::npos) {
            throw Error(ErrorKind::TruncatedFile, fmt::format("row {}: missing token", row));
        }
        std::string token(content.substr(pos, space - pos));
        pos = space + 1;
        if (content.size() - pos < dim * 4) {
            throw Error(ErrorKind::TruncatedFile, fmt::format("row {} ('{}'): expected {} floats", row, token, dim));
        }
        std::vector<float> values(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            std::uint32_t bits = 0;
            std::memcpy(&bits, content.data() + pos + 4 * i, 4);
            if constexpr (std::endian::native == std::endian::big) {
                bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
            }
            std::memcpy(&values[i], &bits, 4);
        }
        pos += dim * 4;
        table.add(std::move(token), std::move(values));
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read embeddings '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    return format == EmbeddingFormat::Binary ? parse_binary_embeddings(content) : parse_text_embeddings(content);
}

EmbeddingFormat guess_embedding_format(const std::filesystem::path& path) {
    return path.extension() == ".bin" ? EmbeddingFormat::Binary : EmbeddingFormat::Text;
}

}  // namespace cohort
