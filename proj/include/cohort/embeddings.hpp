#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cohort {

enum class EmbeddingFormat { Text, Binary };

/// Word-vector table with unit-normalized rows, so cosine similarity is a dot product.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim, char phrase_joiner = '_') : dim_(dim), joiner_(phrase_joiner) {}

    /// Adds a row, normalizing it. Throws DimensionMismatch or ZeroVector.
    void add(std::string token, std::vector<float> vector);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return tokens_.size(); }
    char phrase_joiner() const { return joiner_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<float>* find(std::string_view token) const;

    /// Direct lookup for single tokens; multi-word terms try the joined form and then
    /// fall back to the re-normalized mean of the known constituent vectors.
    std::optional<std::vector<float>> vector_for(std::string_view term) const;

    /// Vocabulary entries with cosine >= `threshold` to `term`, excluding the term itself,
    /// most similar first (ties by token), at most `k_max`. Throws UnknownTerm.
    std::vector<std::pair<std::string, double>> neighbors(std::string_view term, double threshold,
                                                          std::size_t k_max = 25) const;

private:
    std::size_t dim_ = 0;
    char joiner_ = '_';
    std::vector<std::string> tokens_;
    std::vector<std::vector<float>> vectors_;
    std::unordered_map<std::string, std::size_t> index_;
};

double cosine(const std::vector<float>& a, const std::vector<float>& b);

EmbeddingTable load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
EmbeddingTable parse_text_embeddings(std::string_view content);
EmbeddingTable parse_binary_embeddings(std::string_view content);

/// ".bin" selects the binary word2vec layout, anything else the text layout.
EmbeddingFormat guess_embedding_format(const std::filesystem::path& path);

}  // namespace cohort
