from hypothesis import settings

settings.register_profile("suite", max_examples=100, deadline=None,
                          derandomize=True)
settings.load_profile("suite")
