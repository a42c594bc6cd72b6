// Serves the embedding and chat endpoints locally so the CLI can run its
// reranking stages without a real model.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "helea/testing/mock_server.hpp"

namespace {
helea::testing::MockServer* g_server = nullptr;
void on_signal(int) {
    if (g_server) g_server->stop();
}
} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mock embedding and chat-completion server"};
    helea::testing::MockServerOptions opts;
    app.add_option("--port", opts.port, "listen port (0 picks one)");
    app.add_option("--dimension", opts.embedding_dimension, "embedding width");
    CLI11_PARSE(app, argc, argv);

    helea::testing::MockServer server(opts);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "embeddings: " << server.embedding_url() << "\nchat: " << server.chat_url() << std::endl;
    server.wait();
    return 0;
}
