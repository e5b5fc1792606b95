import pytest


VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "obama", "speaks", "to", "the", "media", "in",
    "il", "##lino", "##is", ".", ",",
    "president", "greets", "press", "chicago",
    "quick", "brown", "fox", "jumps", "over", "lazy", "dog",
    "sun", "rises", "east", "west", "wind", "blows",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A deterministic, locally-constructed bidirectional transformer plus
    WordPiece tokenizer; exercises the exact code path used for the real
    pretrained model without needing network access."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    model_dir = tmp_path_factory.mktemp("tiny-model")
    tokenizer = BertTokenizer(vocab={word: i for i, word in enumerate(VOCAB)}, do_lower_case=True)
    tokenizer.save_pretrained(model_dir)

    torch.manual_seed(12345)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    model.save_pretrained(model_dir)
    return str(model_dir)
