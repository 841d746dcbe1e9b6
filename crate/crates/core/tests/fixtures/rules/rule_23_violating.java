public String firstLine(BufferedReader reader) {
    return reader.readLine();
}
