public int countLines(BufferedReader reader) {
    int count = 0;
    while (reader.readLine() != null) {
        count++;
    }
    return count;
}
