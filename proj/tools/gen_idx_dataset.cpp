// Writes a synthetic glyph corpus in MNIST/IDX layout for the idx dataset
// kind; see README for the experiment recipes that consume it.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "compmod/data.hpp"
#include "compmod/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic IDX (MNIST-format) image corpus"};
    std::string out_prefix = "data/glyphs";
    int num_classes = 10;
    std::size_t size = 16;
    std::size_t train_per_class = 1000;
    std::size_t test_per_class = 200;
    std::uint64_t seed = 1;
    double noise = 0.08;

    app.add_option("--out", out_prefix, "Output path prefix");
    app.add_option("--classes", num_classes, "Number of classes");
    app.add_option("--size", size, "Image side length");
    app.add_option("--train-per-class", train_per_class, "Training samples per class");
    app.add_option("--test-per-class", test_per_class, "Test samples per class");
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--noise", noise, "Pixel noise sigma");
    CLI11_PARSE(app, argc, argv);

    try {
        compmod::GlyphImageSpec spec;
        spec.num_classes = num_classes;
        spec.rows = spec.cols = size;
        spec.samples_per_class = train_per_class + test_per_class;
        spec.noise = noise;
        spec.seed = seed;

        std::vector<std::vector<std::uint8_t>> images;
        std::vector<std::uint8_t> labels;
        compmod::gen_glyph_images(spec, images, labels);

        // Class-blocked output: the first train_per_class of each class go to
        // the train files.
        std::vector<std::vector<std::uint8_t>> train_images, test_images;
        std::vector<std::uint8_t> train_labels, test_labels;
        for (int c = 0; c < num_classes; ++c) {
            const std::size_t base = static_cast<std::size_t>(c) * spec.samples_per_class;
            for (std::size_t i = 0; i < train_per_class; ++i) {
                train_images.push_back(images[base + i]);
                train_labels.push_back(labels[base + i]);
            }
            for (std::size_t i = 0; i < test_per_class; ++i) {
                test_images.push_back(images[base + train_per_class + i]);
                test_labels.push_back(labels[base + train_per_class + i]);
            }
        }
        compmod::save_idx(out_prefix + "-train-images-idx3-ubyte",
                          out_prefix + "-train-labels-idx1-ubyte", train_images, size,
                          size, train_labels);
        compmod::save_idx(out_prefix + "-test-images-idx3-ubyte",
                          out_prefix + "-test-labels-idx1-ubyte", test_images, size,
                          size, test_labels);
        std::cout << "wrote " << train_images.size() << " train / " << test_images.size()
                  << " test images under " << out_prefix << "-*\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
