public String firstField(StringTokenizer tokenizer) {
    return tokenizer.nextToken();
}
